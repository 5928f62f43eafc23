"""Independent reference integrator for a single stage.

Integrating-factor RK4: each band's free advection is removed exactly in the
Fourier domain, and the remaining coupling ODE is stepped with classical
fourth-order Runge-Kutta. No operator splitting is involved, so its error
structure is unrelated to the Strang scheme in ``propagator``.
"""

from __future__ import annotations

import numpy as np

from .propagator import StageSpec


def reference_propagate(stage: StageSpec, a_s: np.ndarray, a_r: np.ndarray,
                        refinement: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Output sample arrays using ``refinement * n_z_steps`` RK4 steps."""
    grid = stage.grid
    w = grid.omegas
    pump = stage.pump.samples * np.exp(1j * stage.pump_phase)
    pump_c = np.conj(pump)
    g = stage.gamma
    n_steps = refinement * stage.n_z_steps
    h = stage.length / n_steps

    def fields(z, b_s, b_r):
        a_s = np.fft.ifft(b_s * np.exp(-1j * w * stage.v_s * z))
        a_r = np.fft.ifft(b_r * np.exp(-1j * w * stage.v_r * z))
        return a_s, a_r

    def rhs(z, b_s, b_r):
        a_s, a_r = fields(z, b_s, b_r)
        d_s = np.fft.fft(1j * g * pump_c * a_r) * np.exp(1j * w * stage.v_s * z)
        d_r = np.fft.fft(1j * g * pump * a_s) * np.exp(1j * w * stage.v_r * z)
        return d_s, d_r

    b_s = np.fft.fft(np.asarray(a_s, dtype=complex))
    b_r = np.fft.fft(np.asarray(a_r, dtype=complex))
    for k in range(n_steps):
        z = k * h
        k1 = rhs(z, b_s, b_r)
        k2 = rhs(z + h / 2, b_s + h / 2 * k1[0], b_r + h / 2 * k1[1])
        k3 = rhs(z + h / 2, b_s + h / 2 * k2[0], b_r + h / 2 * k2[1])
        k4 = rhs(z + h, b_s + h * k3[0], b_r + h * k3[1])
        b_s = b_s + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b_r = b_r + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return fields(stage.length, b_s, b_r)
