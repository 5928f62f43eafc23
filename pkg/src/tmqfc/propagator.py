"""Split-step integration of pulsed three-wave mixing in a single stage.

Equations of motion (pump-comoving frame, ``t' = t - beta_p z``)::

    (d_z + v_s d_t') A_s = i gamma conj(P(t')) A_r
    (d_z + v_r d_t') A_r = i gamma P(t') A_s

with ``v_j = beta_j - beta_p`` and ``P = A_p exp(i pump_phase)``. The pump is
static in this frame, so each Strang step (half advection, exact pointwise
rotation, half advection) is the same linear map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import CalibrationError, LeakageError
from .grid import (Band, Envelope, TemporalGrid, centroid_and_width, check_same_grid,
                   edge_fraction, register_wavelength, squared_norm, zeros)

logger = logging.getLogger(__name__)

LEAKAGE_LIMIT = 1e-6
INPUT_TAIL_LIMIT = 1e-10


@dataclass(frozen=True, eq=False)
class StageSpec:
    """Medium and pump of one conversion stage.

    Lengths in mm, group slownesses in fs/mm, ``gamma`` in fs^(1/2)/mm.
    """

    length: float
    beta_p: float
    beta_s: float
    beta_r: float
    gamma: float
    pump: Envelope
    n_z_steps: int = 512
    pump_phase: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if int(self.n_z_steps) != self.n_z_steps or self.n_z_steps < 16:
            raise ValueError(f"n_z_steps must be an integer >= 16, got {self.n_z_steps}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if abs(squared_norm(self.pump) - 1) > 1e-9:
            raise ValueError("pump envelope must be square normalized")

    @property
    def grid(self) -> TemporalGrid:
        return self.pump.grid

    @property
    def v_s(self) -> float:
        return self.beta_s - self.beta_p

    @property
    def v_r(self) -> float:
        return self.beta_r - self.beta_p

    @property
    def dz(self) -> float:
        return self.length / self.n_z_steps

    @property
    def walkoff(self) -> float:
        """Signal-register walk-off (beta_r - beta_s) L in fs; signed."""
        return (self.beta_r - self.beta_s) * self.length

    @property
    def tau_p(self) -> float:
        return pump_duration(self.pump)

    @property
    def zeta(self) -> float:
        return abs(self.walkoff) / self.tau_p

    @property
    def effective_strength(self) -> float:
        """gamma * sqrt(L / |beta_r - beta_s|); undefined for group-matched bands."""
        return self.gamma * np.sqrt(self.length / _slowness_gap(self))

    def with_gamma(self, gamma: float) -> "StageSpec":
        return replace(self, gamma=float(gamma))

    def with_effective_strength(self, gamma_eff: float) -> "StageSpec":
        return self.with_gamma(gamma_from_effective(gamma_eff, self))

    def with_pump(self, pump: Envelope) -> "StageSpec":
        return replace(self, pump=pump)


@dataclass(frozen=True, eq=False)
class StageOutput:
    signal_out: Envelope
    register_out: Envelope
    boundary_leakage: float


def pump_duration(pump: Envelope) -> float:
    """tau_p from the RMS intensity width (tau for a Gaussian exp(-t^2/2tau^2))."""
    return float(np.sqrt(2) * centroid_and_width(pump)[1])


def _slowness_gap(stage: StageSpec) -> float:
    gap = abs(stage.beta_r - stage.beta_s)
    if gap == 0:
        raise ValueError("effective strength needs beta_r != beta_s")
    return gap


def gamma_from_effective(gamma_eff: float, stage: StageSpec) -> float:
    return gamma_eff * np.sqrt(_slowness_gap(stage) / stage.length)


def _advection_kernel(grid: TemporalGrid, velocity: float, dz: float) -> np.ndarray:
    return np.exp(-1j * grid.omegas * velocity * dz)


def rotation_coefficients(stage: StageSpec, dz: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise (cos theta, i exp(i phi) sin theta) for one step."""
    dz = stage.dz if dz is None else dz
    ap = stage.pump.samples
    theta = stage.gamma * np.abs(ap) * dz
    phi = np.angle(ap) + stage.pump_phase
    return np.cos(theta), 1j * np.exp(1j * phi) * np.sin(theta)


def _advect(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if x.ndim > 1:
        kernel = kernel[:, None]
    return np.fft.ifft(np.fft.fft(x, axis=0) * kernel, axis=0)


def propagate_arrays(stage: StageSpec, a_s: np.ndarray, a_r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the Strang scheme on raw sample arrays (axis 0 is time)."""
    a_s = np.array(a_s, dtype=complex)
    a_r = np.array(a_r, dtype=complex)
    if stage.gamma == 0 and stage.v_s == 0 and stage.v_r == 0:
        return a_s, a_r
    grid = stage.grid
    dz = stage.dz
    half_s = _advection_kernel(grid, stage.v_s, dz / 2)
    half_r = _advection_kernel(grid, stage.v_r, dz / 2)
    full_s = half_s ** 2
    full_r = half_r ** 2
    c, u = rotation_coefficients(stage)
    if a_s.ndim > 1:
        c = c[:, None]
        u = u[:, None]
    u_back = -np.conj(u)

    a_s = _advect(a_s, half_s)
    a_r = _advect(a_r, half_r)
    n = stage.n_z_steps
    for step in range(n):
        if stage.gamma != 0:
            a_s, a_r = c * a_s + u_back * a_r, u * a_s + c * a_r
        last = step == n - 1
        a_s = _advect(a_s, half_s if last else full_s)
        a_r = _advect(a_r, half_r if last else full_r)
    return a_s, a_r


def _check_input_tails(e: Envelope) -> None:
    power = e.intensity
    peak = power.max()
    if peak == 0:
        return
    if max(power[0], power[-1]) > INPUT_TAIL_LIMIT * peak:
        raise LeakageError(
            f"{e.band.value} input touches the grid edge "
            f"(edge/peak = {max(power[0], power[-1]) / peak:.3g})")


def propagate(stage: StageSpec, signal_in: Envelope, register_in: Envelope | None = None) -> StageOutput:
    """Fields at z = L for the given inputs at z = 0."""
    if register_in is None:
        register_in = zeros(signal_in.grid, Band.REGISTER,
                            register_wavelength(stage.pump.carrier_wavelength,
                                                signal_in.carrier_wavelength))
    check_same_grid(stage.pump, signal_in, register_in)
    _check_input_tails(signal_in)
    _check_input_tails(register_in)
    s_out, r_out = propagate_arrays(stage, signal_in.samples, register_in.samples)
    leakage = edge_fraction(np.stack([s_out, r_out], axis=1))
    if leakage > LEAKAGE_LIMIT:
        raise LeakageError(
            f"boundary leakage {leakage:.3g} exceeds {LEAKAGE_LIMIT:g}; "
            "the grid is too small for the walk-off")
    return StageOutput(signal_in.with_samples(s_out), register_in.with_samples(r_out), leakage)


def conversion_efficiency(stage: StageSpec, signal_in: Envelope) -> float:
    """Fraction of signal power depleted by the stage (register input empty)."""
    out = propagate(stage, signal_in)
    norm_in = squared_norm(signal_in)
    return 1.0 - squared_norm(out.signal_out) / norm_in


def calibrate_gamma(stage: StageSpec, signal_in: Envelope, target_ce: float,
                    tol: float = 1e-6, step: float = 0.1, max_strength: float = 20.0) -> float:
    """Coupling strength giving ``target_ce``, below the first CE maximum.

    The effective strength is stepped upward until the target is bracketed,
    then refined by bisection. Raises CalibrationError when CE peaks (or
    never rises) before reaching the target.
    """
    if target_ce == 0:
        return 0.0
    if not 0 < target_ce < 1:
        raise ValueError(f"target_ce must lie in [0, 1), got {target_ce}")

    def ce_at(g_eff: float) -> float:
        return conversion_efficiency(stage.with_effective_strength(g_eff), signal_in)

    lo, ce_lo = 0.0, 0.0
    hi = step
    while True:
        ce_hi = ce_at(hi)
        if ce_hi >= target_ce:
            break
        if ce_hi <= ce_lo + 1e-12:
            raise CalibrationError(
                f"CE peaks at {max(ce_lo, ce_hi):.4g} below target {target_ce:g}")
        if hi >= max_strength:
            raise CalibrationError(
                f"CE {ce_hi:.4g} still below target {target_ce:g} at effective strength {hi:g}")
        lo, ce_lo = hi, ce_hi
        hi = hi + step

    for _ in range(100):
        mid = 0.5 * (lo + hi)
        ce_mid = ce_at(mid)
        if abs(ce_mid - target_ce) < tol:
            lo = hi = mid
            break
        if ce_mid < target_ce:
            lo = mid
        else:
            hi = mid
    g_eff = 0.5 * (lo + hi)
    logger.debug("calibrated effective strength %.6f for CE %.4f", g_eff, target_ce)
    return gamma_from_effective(g_eff, stage)
