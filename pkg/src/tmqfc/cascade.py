"""Two-stage temporal-mode interferometer (optical Ramsey cascade).

Stage 2 is a second forward pass through an identical medium driven by a
fresh pump. Between the stages each arm receives a phase, a delay and an
amplitude transmission. With the automatic delays every band's free walk-off
in stage 1 is undone relative to pump 2, so register light generated at depth
z meets the second pump again at depth z.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .grid import (Envelope, apply_delay, apply_phase, delay_samples, check_delay,
                   mirror_displacement_to_delay, mirror_displacement_to_phase, squared_norm)
from .green import DELTA, GreenFunction, assemble
from .propagator import StageSpec, propagate

SIGNAL_WAVELENGTH = 812.2
PUMP_WAVELENGTH = 821.0


@dataclass(frozen=True)
class InterstageOps:
    """Per-arm operations between the stages.

    Delays are absolute (fs); ``None`` selects the automatic re-overlap value.
    ``pump2_delay`` positions the second pump on the grid.
    """

    phase_s: float = 0.0
    phase_r: float = 0.0
    pump2_phase: float = 0.0
    delay_s: float | None = None
    delay_r: float | None = None
    transmission_s: float = 1.0
    transmission_r: float = 1.0
    pump2_delay: float | None = None

    def __post_init__(self):
        for name in ("transmission_s", "transmission_r"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _same_medium(a: StageSpec, b: StageSpec) -> bool:
    return (a.length, a.beta_p, a.beta_s, a.beta_r, a.n_z_steps) == (b.length, b.beta_p, b.beta_s, b.beta_r, b.n_z_steps)


@dataclass(frozen=True, eq=False)
class CascadeSpec:
    stage1: StageSpec
    stage2: StageSpec
    ops: InterstageOps = InterstageOps()
    allow_medium_mismatch: bool = False

    def __post_init__(self):
        if not self.allow_medium_mismatch and not _same_medium(self.stage1, self.stage2):
            raise ValueError("stage 2 must use the same medium as stage 1 "
                             "(set allow_medium_mismatch to override)")
        if self.stage1.grid != self.stage2.grid:
            raise ValueError("stages must share one temporal grid")

    @classmethod
    def symmetric(cls, stage: StageSpec, ops: InterstageOps | None = None,
                  gamma2: float | None = None) -> "CascadeSpec":
        """Two passes through the same stage; ``gamma2`` overrides the second coupling."""
        stage2 = stage if gamma2 is None else stage.with_gamma(gamma2)
        return cls(stage, stage2, ops or InterstageOps())

    def with_ops(self, **changes) -> "CascadeSpec":
        return replace(self, ops=replace(self.ops, **changes))


@dataclass(frozen=True)
class ResolvedDelays:
    signal: float
    register: float
    pump2: float


def auto_delays(stage: StageSpec) -> ResolvedDelays:
    """Delays that undo stage-1 walk-off relative to a pump-2 placed midway."""
    walk_s = stage.v_s * stage.length
    walk_r = stage.v_r * stage.length
    pump2 = 0.5 * (walk_s + walk_r)
    return ResolvedDelays(pump2 - walk_s, pump2 - walk_r, pump2)


def resolve_delays(spec: CascadeSpec) -> ResolvedDelays:
    auto = auto_delays(spec.stage1)
    ops = spec.ops
    return ResolvedDelays(
        auto.signal if ops.delay_s is None else ops.delay_s,
        auto.register if ops.delay_r is None else ops.delay_r,
        auto.pump2 if ops.pump2_delay is None else ops.pump2_delay,
    )


def net_phase(ops: InterstageOps) -> float:
    """pump2_phase + phase_s - phase_r wrapped to (-pi, pi]."""
    phi = ops.pump2_phase + ops.phase_s - ops.phase_r
    wrapped = np.pi - np.mod(np.pi - phi, 2 * np.pi)
    return float(wrapped)


def effective_stage2(spec: CascadeSpec) -> StageSpec:
    delays = resolve_delays(spec)
    stage2 = spec.stage2
    pump = apply_delay(stage2.pump, delays.pump2)
    return replace(stage2, pump=pump, pump_phase=stage2.pump_phase + spec.ops.pump2_phase)


@dataclass(frozen=True, eq=False)
class CascadeResult:
    signal_out: Envelope
    register_out: Envelope
    ce: float
    signal_mid: Envelope
    register_mid: Envelope


def internal_ce(signal_out: Envelope, signal_in: Envelope, transmission_s: float) -> float:
    """Signal depletion relative to the pumps-off output (insensitive to static loss)."""
    reference = transmission_s ** 2 * squared_norm(signal_in)
    if reference == 0:
        return float("nan")
    return 1.0 - squared_norm(signal_out) / reference


def interstage(spec: CascadeSpec, signal_mid: Envelope, register_mid: Envelope) -> tuple[Envelope, Envelope]:
    ops = spec.ops
    delays = resolve_delays(spec)
    s = apply_phase(apply_delay(signal_mid, delays.signal), ops.phase_s).scaled(ops.transmission_s)
    r = apply_phase(apply_delay(register_mid, delays.register), ops.phase_r).scaled(ops.transmission_r)
    return s, r


def run_cascade(spec: CascadeSpec, signal_in: Envelope) -> CascadeResult:
    first = propagate(spec.stage1, signal_in)
    s2_in, r2_in = interstage(spec, first.signal_out, first.register_out)
    second = propagate(effective_stage2(spec), s2_in, r2_in)
    ce = internal_ce(second.signal_out, signal_in, spec.ops.transmission_s)
    return CascadeResult(second.signal_out, second.register_out, ce,
                         first.signal_out, first.register_out)


def _translate(g: GreenFunction, tau: float) -> np.ndarray:
    """Matrix of a pure delay by ``tau`` in the basis coordinates of ``g``."""
    bg = g.basis_grid
    return delay_samples(np.eye(bg.n_points), bg, tau)


def _conjugate(g: GreenFunction, shift: np.ndarray | None, phase: float) -> GreenFunction:
    """Green function of the same stage with its pump delayed and phase-shifted."""
    ss, sr, rs, rr = g.G_ss, g.G_sr, g.G_rs, g.G_rr
    if shift is not None:
        back = shift.conj().T
        ss, sr, rs, rr = (shift @ b @ back for b in (ss, sr, rs, rr))
    if phase:
        rot = np.exp(1j * phase)
        sr = sr * np.conj(rot)
        rs = rs * rot
    return GreenFunction(g.grid, ss, sr, rs, rr, g.basis, g.signal_wavelength, g.register_wavelength)


def interstage_matrix(g: GreenFunction, spec: CascadeSpec) -> tuple[np.ndarray, np.ndarray]:
    ops = spec.ops
    delays = resolve_delays(spec)
    check_delay(g.grid, delays.signal)
    check_delay(g.grid, delays.register)
    d_s = _translate(g, delays.signal) * (ops.transmission_s * np.exp(1j * ops.phase_s))
    d_r = _translate(g, delays.register) * (ops.transmission_r * np.exp(1j * ops.phase_r))
    return d_s, d_r


def compose(g2: GreenFunction, d_s: np.ndarray, d_r: np.ndarray, g1: GreenFunction) -> GreenFunction:
    a_ss = d_s @ g1.G_ss
    a_sr = d_s @ g1.G_sr
    a_rs = d_r @ g1.G_rs
    a_rr = d_r @ g1.G_rr
    return GreenFunction(
        g1.grid,
        g2.G_ss @ a_ss + g2.G_sr @ a_rs,
        g2.G_ss @ a_sr + g2.G_sr @ a_rr,
        g2.G_rs @ a_ss + g2.G_rr @ a_rs,
        g2.G_rs @ a_sr + g2.G_rr @ a_rr,
        g1.basis, g1.signal_wavelength, g1.register_wavelength)


def stage_greens(spec: CascadeSpec, basis: str = DELTA, n_eff: int | None = None,
                 g1: GreenFunction | None = None) -> tuple[GreenFunction, GreenFunction]:
    """Green functions of stage 1 and of the effective stage 2."""
    if g1 is None:
        g1 = assemble(spec.stage1, basis, n_eff)
    s1, s2 = spec.stage1, spec.stage2
    reusable = (_same_medium(s1, s2) and s1.pump is s2.pump and s1.gamma == s2.gamma)
    delays = resolve_delays(spec)
    phase = s2.pump_phase - s1.pump_phase + spec.ops.pump2_phase
    if reusable:
        check_delay(g1.grid, delays.pump2)
        shift = _translate(g1, delays.pump2) if delays.pump2 else None
        g2 = _conjugate(g1, shift, phase)
    else:
        g2 = assemble(effective_stage2(spec), g1.basis, g1.n_basis)
    return g1, g2


def cascade_green(spec: CascadeSpec, basis: str = DELTA, n_eff: int | None = None,
                  g1: GreenFunction | None = None) -> GreenFunction:
    """G2 . D . G1 with D the per-arm phase/delay/loss operator."""
    g1, g2 = stage_greens(spec, basis, n_eff, g1)
    d_s, d_r = interstage_matrix(g1, spec)
    return compose(g2, d_s, d_r, g1)


class Mirror(str, enum.Enum):
    S = "s"
    R = "r"
    BOTH_SAME = "both_same"
    BOTH_OPPOSITE = "both_opposite"


def mirror_moves(which: Mirror | str, dL: float, s_step_ratio: float = 1.0) -> tuple[float, float]:
    """(s-mirror, r-mirror) displacements for a scan coordinate ``dL``."""
    which = Mirror(which)
    if which is Mirror.S:
        return dL, 0.0
    if which is Mirror.R:
        return 0.0, dL
    if which is Mirror.BOTH_SAME:
        return s_step_ratio * dL, dL
    return -s_step_ratio * dL, dL


def fringe_scan(spec: CascadeSpec, which_mirror: Mirror | str, displacements, signal_in: Envelope,
                s_step_ratio: float = 1.0, map_fn=map) -> list[tuple[float, float]]:
    """Internal CE versus mirror displacement (nm).

    Positive displacement lengthens the arm: it adds 4 pi dL / lambda of phase
    and 2 dL / c of delay on top of the configured interstage operations.
    """
    first = propagate(spec.stage1, signal_in)
    base = resolve_delays(spec)
    wl_s = first.signal_out.carrier_wavelength
    wl_r = first.register_out.carrier_wavelength
    stage2 = effective_stage2(spec)

    def point(dL):
        d_s, d_r = mirror_moves(which_mirror, dL, s_step_ratio)
        moved = spec.with_ops(
            phase_s=spec.ops.phase_s + mirror_displacement_to_phase(d_s, wl_s),
            phase_r=spec.ops.phase_r + mirror_displacement_to_phase(d_r, wl_r),
            delay_s=base.signal + mirror_displacement_to_delay(d_s),
            delay_r=base.register + mirror_displacement_to_delay(d_r),
            pump2_delay=base.pump2,
        )
        s2, r2 = interstage(moved, first.signal_out, first.register_out)
        out = propagate(stage2, s2, r2)
        return float(dL), internal_ce(out.signal_out, signal_in, spec.ops.transmission_s)

    return list(map_fn(point, [float(x) for x in displacements]))


def fringe_visibility(values) -> float:
    values = np.asarray(values, dtype=float)
    hi, lo = values.max(), values.min()
    return float((hi - lo) / (hi + lo))


def phase_scan(spec: CascadeSpec, signal_in: Envelope, phases) -> list[tuple[float, float, float]]:
    """(net phase, internal CE, output signal power) as pump-2 phase is scanned."""
    first = propagate(spec.stage1, signal_in)
    s2, r2 = interstage(spec, first.signal_out, first.register_out)
    rows = []
    for phi in phases:
        moved = spec.with_ops(pump2_phase=spec.ops.pump2_phase + float(phi))
        out = propagate(effective_stage2(moved), s2, r2)
        rows.append((net_phase(moved.ops), internal_ce(out.signal_out, signal_in, spec.ops.transmission_s),
                     squared_norm(out.signal_out)))
    return rows


def peak_ce(spec: CascadeSpec, signal_in: Envelope, g: tuple[GreenFunction, GreenFunction] | None = None
            ) -> tuple[float, float]:
    """Maximum internal CE over the net interferometric phase, and the phase attaining it.

    The stage-2 signal output is x + exp(-i Phi) y where x is the signal-arm
    contribution and y the back-converted register arm, so the optimum is
    found in closed form.
    """
    base = spec.with_ops(pump2_phase=0.0, phase_s=0.0, phase_r=0.0)
    if g is None:
        first = propagate(base.stage1, signal_in)
        s2, r2 = interstage(base, first.signal_out, first.register_out)
        stage2 = effective_stage2(base)
        x = propagate(stage2, s2, r2.scaled(0)).signal_out.samples
        y = propagate(stage2, s2.scaled(0), r2).signal_out.samples
        dt = signal_in.grid.dt
        xx = np.vdot(x, x).real * dt
        yy = np.vdot(y, y).real * dt
        xy = np.vdot(x, y) * dt
    else:
        g1, g2 = g
        d_s, d_r = interstage_matrix(g1, base)
        u = g1.to_coords(signal_in.samples)
        x = g2.G_ss @ (d_s @ (g1.G_ss @ u))
        y = g2.G_sr @ (d_r @ (g1.G_rs @ u))
        xx = np.vdot(x, x).real
        yy = np.vdot(y, y).real
        xy = np.vdot(x, y)
    # |x + e^{-i Phi} y|^2 is smallest when e^{-i Phi} <x, y> = -|<x, y>|
    out_min = xx + yy - 2 * abs(xy)
    ce = 1.0 - out_min / (spec.ops.transmission_s ** 2 * squared_norm(signal_in))
    phi = float(np.angle(xy) - np.pi)
    phi = float(np.pi - np.mod(np.pi - phi, 2 * np.pi))
    return float(ce), phi
