"""Temporal grids and complex band envelopes.

Times are in femtoseconds, wavelengths and mirror displacements in
nanometres. Envelope samples carry units of fs^(-1/2) so that
``squared_norm`` is dimensionless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, GuardError

SPEED_OF_LIGHT = 299.792458  # nm / fs
DELAY_GUARD_FRACTION = 0.25


class Band(str, enum.Enum):
    PUMP = "pump"
    SIGNAL = "signal"
    REGISTER = "register"


def register_wavelength(pump_nm: float, signal_nm: float) -> float:
    """Carrier wavelength of the sum-frequency band, from w_r = w_p + w_s."""
    if pump_nm <= 0 or signal_nm <= 0:
        raise ValueError("wavelengths must be positive")
    return pump_nm * signal_nm / (pump_nm + signal_nm)


@dataclass(frozen=True)
class TemporalGrid:
    n_points: int
    t_start: float
    dt: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError(f"n_points must be an integer >= 8, got {self.n_points}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def centered(cls, n_points: int, span: float) -> "TemporalGrid":
        """Grid of ``n_points`` samples covering ``[-span/2, span/2)``."""
        dt = span / n_points
        return cls(n_points, -0.5 * span, dt)

    @property
    def span(self) -> float:
        return self.n_points * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_points)

    @property
    def omegas(self) -> np.ndarray:
        """Angular-frequency axis (rad/fs) in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dt)

    @property
    def d_omega(self) -> float:
        return 2 * np.pi / self.span


@dataclass(frozen=True, eq=False)
class Envelope:
    grid: TemporalGrid
    band: Band
    carrier_wavelength: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "band", Band(self.band))

    def with_samples(self, samples: np.ndarray) -> "Envelope":
        return Envelope(self.grid, self.band, self.carrier_wavelength, samples)

    def scaled(self, factor: complex) -> "Envelope":
        return self.with_samples(self.samples * factor)

    def normalized(self) -> "Envelope":
        norm2 = squared_norm(self)
        if norm2 <= 0:
            raise ValueError("cannot normalize a zero envelope")
        return self.scaled(1 / np.sqrt(norm2))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2


def zeros(grid: TemporalGrid, band: Band, carrier_wavelength: float) -> Envelope:
    return Envelope(grid, band, carrier_wavelength, np.zeros(grid.n_points, complex))


def check_same_grid(*envelopes: Envelope) -> TemporalGrid:
    grid = envelopes[0].grid
    for e in envelopes[1:]:
        if e.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {e.grid}")
    return grid


def squared_norm(e: Envelope) -> float:
    return float(np.sum(np.abs(e.samples) ** 2) * e.grid.dt)


def inner_product(a: Envelope, b: Envelope) -> complex:
    """Discrete overlap sum(conj(a) * b) * dt."""
    check_same_grid(a, b)
    return complex(np.vdot(a.samples, b.samples) * a.grid.dt)


def apply_phase(e: Envelope, phi: float) -> Envelope:
    return e.scaled(np.exp(1j * phi))


def delay_samples(samples: np.ndarray, grid: TemporalGrid, tau: float) -> np.ndarray:
    """Band-limited shift x(t) -> x(t - tau) along axis 0, no guard."""
    if tau == 0:
        return np.array(samples, dtype=complex)
    kernel = np.exp(-1j * grid.omegas * tau)
    if samples.ndim > 1:
        kernel = kernel.reshape((-1,) + (1,) * (samples.ndim - 1))
    return np.fft.ifft(np.fft.fft(samples, axis=0) * kernel, axis=0)


def check_delay(grid: TemporalGrid, tau: float) -> None:
    limit = DELAY_GUARD_FRACTION * grid.span
    if abs(tau) >= limit:
        raise GuardError(
            f"delay {tau:.6g} fs exceeds the wraparound guard ({limit:.6g} fs, "
            f"{DELAY_GUARD_FRACTION:.0%} of the grid span)")


def apply_delay(e: Envelope, tau: float) -> Envelope:
    """Return the envelope e(t - tau) using spectral interpolation."""
    check_delay(e.grid, tau)
    if tau == 0:
        return e
    return e.with_samples(delay_samples(e.samples, e.grid, tau))


def mirror_displacement_to_phase(dL: float, wavelength: float) -> float:
    """Interferometric phase of a double-passed mirror displacement, 4*pi*dL/lambda."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    return 2 * np.pi * (2 * dL) / wavelength


def mirror_displacement_to_delay(dL: float) -> float:
    """Extra round-trip group delay (fs) of a mirror moved by dL nm."""
    return 2 * dL / SPEED_OF_LIGHT


def moments(times: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Weighted mean and RMS spread of ``times``."""
    total = np.sum(weights)
    if not total > 0:
        raise ValueError("weights must have a positive sum")
    mean = np.sum(times * weights) / total
    var = np.sum((times - mean) ** 2 * weights) / total
    return float(mean), float(np.sqrt(max(var, 0.0)))


def centroid_and_width(e: Envelope) -> tuple[float, float]:
    """Intensity-weighted mean time and RMS width of |e(t)|^2."""
    if squared_norm(e) <= 0:
        raise ValueError("centroid of a zero envelope is undefined")
    return moments(e.grid.times, e.intensity)


def edge_fraction(samples: np.ndarray, fraction: float = 1 / 32) -> float:
    """Share of total |x|^2 within ``fraction`` of the span at either edge."""
    power = np.abs(samples) ** 2
    if power.ndim > 1:
        power = power.sum(axis=tuple(range(1, power.ndim)))
    total = power.sum()
    if total == 0:
        return 0.0
    m = max(1, int(round(fraction * power.shape[0])))
    return float((power[:m].sum() + power[-m:].sum()) / total)
