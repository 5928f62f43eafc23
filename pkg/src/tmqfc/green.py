"""Discretized input/output scattering matrices of a stage.

Blocks act on orthonormal coordinates ``u = x * sqrt(dt_basis)``. Two bases
are supported:

``delta``
    one coordinate per sample of the simulation grid (n x n blocks);
``fourier``
    the band-limited subspace spanned by the central ``n_eff`` Fourier
    modes. Its coordinates are the samples of a coarse grid with the same
    span, so the reduced operator is the same split-step scheme run on that
    coarse grid and stays exactly unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .grid import Band, Envelope, TemporalGrid, check_same_grid, register_wavelength
from .propagator import StageSpec, _advection_kernel, rotation_coefficients

DELTA = "delta"
FOURIER = "fourier"
DEFAULT_N_EFF = 512


def basis_grid(grid: TemporalGrid, basis: str, n_basis: int | None = None) -> TemporalGrid:
    if basis == DELTA:
        return grid
    if basis != FOURIER:
        raise ValueError(f"unknown basis {basis!r}")
    n_basis = DEFAULT_N_EFF if n_basis is None else n_basis
    if n_basis > grid.n_points or n_basis % 2:
        raise ValueError(f"n_eff must be even and <= {grid.n_points}, got {n_basis}")
    return TemporalGrid(n_basis, grid.t_start, grid.span / n_basis)


def _kept_bins(n: int, m: int) -> np.ndarray:
    return np.concatenate([np.arange(m // 2), np.arange(n - m // 2, n)])


def resample(samples: np.ndarray, n_to: int) -> np.ndarray:
    """Band-limited resampling along axis 0 onto ``n_to`` points of equal span."""
    samples = np.asarray(samples, dtype=complex)
    n_from = samples.shape[0]
    if n_to == n_from:
        return samples.copy()
    spec = np.fft.fft(samples, axis=0)
    out = np.zeros((n_to,) + samples.shape[1:], dtype=complex)
    m = min(n_to, n_from)
    out[_kept_bins(n_to, m)] = spec[_kept_bins(n_from, m)]
    return np.fft.ifft(out, axis=0) * (n_to / n_from)


def coarse_stage(stage: StageSpec, bgrid: TemporalGrid) -> StageSpec:
    """The same stage with its pump resampled onto ``bgrid``."""
    if bgrid == stage.grid:
        return stage
    pump = Envelope(bgrid, stage.pump.band, stage.pump.carrier_wavelength,
                    resample(stage.pump.samples, bgrid.n_points))
    return stage.with_pump(pump)


def _advection_matrix(grid: TemporalGrid, velocity: float, dz: float) -> np.ndarray:
    kernel = _advection_kernel(grid, velocity, dz)
    return np.fft.ifft(np.fft.fft(np.eye(grid.n_points), axis=0) * kernel[:, None], axis=0)


def step_matrix(stage: StageSpec) -> np.ndarray:
    """One Strang step as a 2n x 2n matrix on (signal, register) samples."""
    grid = stage.grid
    n = grid.n_points
    a_s = _advection_matrix(grid, stage.v_s, stage.dz / 2)
    a_r = _advection_matrix(grid, stage.v_r, stage.dz / 2)
    c, u = rotation_coefficients(stage)
    t = np.empty((2 * n, 2 * n), dtype=complex)
    t[:n, :n] = a_s @ (c[:, None] * a_s)
    t[:n, n:] = a_s @ (-np.conj(u)[:, None] * a_r)
    t[n:, :n] = a_r @ (u[:, None] * a_s)
    t[n:, n:] = a_r @ (c[:, None] * a_r)
    return t


@dataclass(frozen=True, eq=False)
class GreenFunction:
    grid: TemporalGrid
    G_ss: np.ndarray = field(repr=False)
    G_sr: np.ndarray = field(repr=False)
    G_rs: np.ndarray = field(repr=False)
    G_rr: np.ndarray = field(repr=False)
    basis: str = DELTA
    signal_wavelength: float = 812.2
    register_wavelength: float = 408.2881459710997

    def __post_init__(self):
        m = self.n_basis
        for name in ("G_ss", "G_sr", "G_rs", "G_rr"):
            block = np.asarray(getattr(self, name), dtype=complex)
            if block.shape != (m, m):
                raise ValueError(f"{name} has shape {block.shape}, expected {(m, m)}")
            object.__setattr__(self, name, block)
        basis_grid(self.grid, self.basis, m)

    @property
    def n_basis(self) -> int:
        return np.shape(self.G_ss)[0]

    @property
    def basis_grid(self) -> TemporalGrid:
        return basis_grid(self.grid, self.basis, self.n_basis)

    @property
    def stacked(self) -> np.ndarray:
        return np.block([[self.G_ss, self.G_sr], [self.G_rs, self.G_rr]])

    def unitarity_defect(self) -> float:
        g = self.stacked
        return float(np.max(np.abs(g.conj().T @ g - np.eye(g.shape[0]))))

    def to_coords(self, samples: np.ndarray) -> np.ndarray:
        bg = self.basis_grid
        return resample(samples, bg.n_points) * np.sqrt(bg.dt)

    def from_coords(self, coords: np.ndarray) -> np.ndarray:
        return resample(coords, self.grid.n_points) / np.sqrt(self.basis_grid.dt)

    def coords_envelope(self, coords: np.ndarray, band: Band) -> Envelope:
        wl = self.signal_wavelength if band is Band.SIGNAL else self.register_wavelength
        return Envelope(self.grid, band, wl, self.from_coords(coords))

    @classmethod
    def identity(cls, grid: TemporalGrid, basis: str = DELTA, n_basis: int | None = None,
                 **wavelengths) -> "GreenFunction":
        m = basis_grid(grid, basis, n_basis).n_points
        eye = np.eye(m, dtype=complex)
        zero = np.zeros((m, m), dtype=complex)
        return cls(grid, eye, zero, zero, eye.copy(), basis, **wavelengths)


def assemble(stage: StageSpec, basis: str = DELTA, n_eff: int | None = None,
             signal_wavelength: float = 812.2) -> GreenFunction:
    """Scattering matrix of ``stage`` as the ``n_z_steps``-th power of one step."""
    bgrid = basis_grid(stage.grid, basis, n_eff)
    cstage = coarse_stage(stage, bgrid)
    m = bgrid.n_points
    if cstage.gamma == 0 and cstage.v_s == 0 and cstage.v_r == 0:
        g = np.eye(2 * m, dtype=complex)
    else:
        g = np.linalg.matrix_power(step_matrix(cstage), stage.n_z_steps)
    return GreenFunction(stage.grid, g[:m, :m], g[:m, m:], g[m:, :m], g[m:, m:], basis,
                         signal_wavelength,
                         register_wavelength(stage.pump.carrier_wavelength, signal_wavelength))


def apply(g: GreenFunction, signal_in: Envelope, register_in: Envelope) -> tuple[Envelope, Envelope]:
    """Outputs of ``g`` for the given inputs via block matrix-vector products."""
    grid = check_same_grid(signal_in, register_in)
    if grid != g.grid:
        raise GridMismatchError(f"envelopes on {grid}, Green function on {g.grid}")
    u_s = g.to_coords(signal_in.samples)
    u_r = g.to_coords(register_in.samples)
    out_s = g.G_ss @ u_s + g.G_sr @ u_r
    out_r = g.G_rs @ u_s + g.G_rr @ u_r
    return (signal_in.with_samples(g.from_coords(out_s)),
            register_in.with_samples(g.from_coords(out_r)))


def first_order_kernel(stage: StageSpec, basis: str = DELTA, n_eff: int | None = None) -> np.ndarray:
    """Lowest-order (no time ordering) signal-to-register conversion kernel.

    The pump is line-integrated along the characteristic joining the signal
    ray entering at z = 0 to the register ray leaving at z = L. In the
    Fourier domain the z integral is elementary, so the kernel is exact for
    the semi-discrete (time-sampled) equations and linear in ``gamma``.
    """
    bgrid = basis_grid(stage.grid, basis, n_eff)
    cstage = coarse_stage(stage, bgrid)
    n = bgrid.n_points
    w = bgrid.omegas
    pump = cstage.pump.samples * np.exp(1j * cstage.pump_phase)
    pf = np.fft.fft(pump) / n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    w_out = w[:, None]
    w_in = w[None, :]
    kappa = w_out * stage.v_r - w_in * stage.v_s
    length = stage.length
    q = (np.exp(-1j * w_out * stage.v_r * length) * length * np.exp(1j * kappa * length / 2)
         * np.sinc(kappa * length / (2 * np.pi)))
    m_f = 1j * stage.gamma * q * pf[idx]
    # back to the time basis: F^-1 M F (F symmetric)
    mf = np.fft.fft(m_f.T, axis=0).T
    return np.fft.ifft(mf, axis=0)
