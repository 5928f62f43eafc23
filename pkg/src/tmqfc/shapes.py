"""Pulse mode shapes: the modified Hermite-Gaussian trio and plain HG families.

Shapes are defined in the band's rotating frame, as functions of the
detuning from the carrier, and normalized numerically on the axis they are
sampled on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite

from .errors import LeakageError
from .grid import Band, Envelope, TemporalGrid

DEFAULT_TAU_P = 500.0  # fs
DEFAULT_BANDWIDTH = 1.0 / DEFAULT_TAU_P  # rad / fs
EDGE_TAIL_LIMIT = 1e-10


class Family(str, enum.Enum):
    HG0 = "HG0"
    HG1 = "HG1"
    HG2 = "HG2"
    GAUSSIAN = "gaussian"
    HERMITE_GAUSS_N = "hermite_gauss_n"


@dataclass(frozen=True)
class ShapeSpec:
    family: Family
    bandwidth: float = DEFAULT_BANDWIDTH
    order: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.order < 0:
            raise ValueError("order must be nonnegative")

    @property
    def parity_order(self) -> int:
        if self.family is Family.HG1:
            return 1
        if self.family is Family.HG2:
            return 2
        if self.family is Family.HERMITE_GAUSS_N:
            return self.order
        return 0

    @classmethod
    def from_label(cls, label: str, bandwidth: float = DEFAULT_BANDWIDTH) -> "ShapeSpec":
        """Parse ``"p0"``, ``"s2"``, ``"HG1"`` or ``"gaussian"``."""
        text = label.strip()
        if len(text) == 2 and text[0] in "psPS" and text[1] in "012":
            return cls(Family(f"HG{text[1]}"), bandwidth)
        if text.lower().startswith("hg") and text[2:].isdigit():
            n = int(text[2:])
            if n <= 2:
                return cls(Family(f"HG{n}"), bandwidth)
            return cls(Family.HERMITE_GAUSS_N, bandwidth, n)
        return cls(Family(text), bandwidth)


@dataclass(frozen=True)
class PulseDuration:
    tau_p: float

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ValueError("tau_p must be positive")

    @classmethod
    def from_bandwidth(cls, bandwidth: float) -> "PulseDuration":
        return cls(1.0 / bandwidth)


def _raw_spectrum(spec: ShapeSpec, omega: np.ndarray) -> np.ndarray:
    dw = spec.bandwidth
    fam = spec.family
    if fam in (Family.HG0, Family.GAUSSIAN):
        return np.exp(-omega ** 2 / (2 * dw ** 2))
    if fam is Family.HG1:
        w1 = 0.8 * dw
        return (omega / w1) * np.exp(-omega ** 2 / (2 * w1 ** 2))
    if fam is Family.HG2:
        poly = 2 * (omega / (0.89 * dw)) ** 2 - 1
        return poly * np.exp(-omega ** 2 / (2 * (0.8078 * dw) ** 2))
    coeffs = np.zeros(spec.order + 1)
    coeffs[-1] = 1.0
    x = omega / dw
    return hermite.hermval(x, coeffs) * np.exp(-x ** 2 / 2)


def make_shape_spectral(spec: ShapeSpec, omega: np.ndarray, d_omega: float | None = None) -> np.ndarray:
    """Spectral amplitude of ``spec`` on a detuning axis, with sum |A|^2 dw = 1."""
    omega = np.asarray(omega, dtype=float)
    if d_omega is None:
        d_omega = float(np.min(np.diff(np.sort(omega))))
    amp = _raw_spectrum(spec, omega).astype(complex)
    norm2 = np.sum(np.abs(amp) ** 2) * d_omega
    return amp / np.sqrt(norm2)


def make_shape_temporal(spec: ShapeSpec, grid: TemporalGrid, band: Band = Band.SIGNAL,
                        carrier_wavelength: float = 812.2) -> Envelope:
    """Time-domain envelope of ``spec`` centred at t = 0 on ``grid``, normalized."""
    omega = grid.omegas
    amp = make_shape_spectral(spec, omega, grid.d_omega)
    samples = grid.n_points * np.fft.ifft(amp * np.exp(1j * omega * grid.t_start))
    # the Fourier pair of an order-n Hermite-Gaussian carries a factor i**n
    samples *= (-1j) ** spec.parity_order
    samples /= np.sqrt(np.sum(np.abs(samples) ** 2) * grid.dt)
    power = np.abs(samples) ** 2
    peak = power.max()
    for edge, value in (("leading (t_start)", power[0]), ("trailing (t_end)", power[-1])):
        if value > EDGE_TAIL_LIMIT * peak:
            raise LeakageError(
                f"{spec.family.value} pulse reaches the {edge} edge of the grid "
                f"(|e|^2 = {value / peak:.3g} of peak); widen the grid")
    return Envelope(grid, band, carrier_wavelength, samples)
