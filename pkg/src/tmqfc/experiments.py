"""Simulation-scale versions of the interferometer measurements.

Every function here is deterministic in its arguments and returns an
``ExperimentResult`` whose rows are ready to be written as a table.
Sweep points are independent; pass ``map_fn`` (e.g. an executor's ``map``)
to evaluate them concurrently. Row order never depends on ``map_fn``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .cascade import (CascadeSpec, InterstageOps, Mirror, effective_stage2, fringe_scan,
                      fringe_visibility, interstage, peak_ce, resolve_delays, stage_greens)
from .errors import CalibrationError
from .grid import Band, Envelope, apply_delay, moments, squared_norm
from .green import FOURIER, assemble
from .propagator import StageSpec, propagate
from .schmidt import selectivity_from_singulars
from .shapes import ShapeSpec, make_shape_temporal

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    name: str
    axes: tuple[str, ...]
    rows: list[tuple[float, ...]]
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.axes):
                raise ValueError(f"row {row} does not match axes {self.axes}")

    def column(self, name: str) -> np.ndarray:
        k = self.axes.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)


def signal_envelope(label: str, stage: StageSpec, bandwidth: float, wavelength: float = 812.2) -> Envelope:
    return make_shape_temporal(ShapeSpec.from_label(label, bandwidth), stage.grid, Band.SIGNAL, wavelength)


def pump_envelope(label: str, stage: StageSpec, bandwidth: float) -> Envelope:
    return make_shape_temporal(ShapeSpec.from_label(label, bandwidth), stage.grid, Band.PUMP,
                               stage.pump.carrier_wavelength)


# -- curve measures ---------------------------------------------------------

def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum with linear interpolation of the crossings."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    half = 0.5 * y.max()
    above = np.nonzero(y >= half)[0]
    i0, i1 = above[0], above[-1]
    if i0 == 0 or i1 == len(y) - 1:
        raise ValueError("curve does not fall below half maximum inside the scan range")
    left = np.interp(half, [y[i0 - 1], y[i0]], [x[i0 - 1], x[i0]])
    right = np.interp(half, [y[i1 + 1], y[i1]], [x[i1 + 1], x[i1]])
    return float(right - left)


def kurtosis(x: np.ndarray, y: np.ndarray) -> float:
    """Fourth standardized moment of a nonnegative profile (3 for a Gaussian)."""
    y = np.clip(np.asarray(y, float), 0, None)
    mean, sd = moments(np.asarray(x, float), y)
    return float(np.sum((x - mean) ** 4 * y) / np.sum(y) / sd ** 4)


def equivalent_width(x: np.ndarray, y: np.ndarray) -> float:
    """Area over peak."""
    return float(np.trapezoid(y, x) / np.max(y))


def fringe_period(x: np.ndarray, y: np.ndarray) -> float:
    """Period of a sinusoidal fringe, from a least-squares cosine fit."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    dx = x[1] - x[0]
    spectrum = np.abs(np.fft.rfft(y - y.mean(), n=16 * len(y)))
    freqs = np.fft.rfftfreq(16 * len(y), dx)
    k0 = 2 * np.pi * freqs[np.argmax(spectrum[1:]) + 1]

    def model(xx, a, b, c, k):
        return a + b * np.cos(k * xx) + c * np.sin(k * xx)

    p0 = (y.mean(), 0.5 * np.ptp(y), 0.0, k0)
    params, _ = optimize.curve_fit(model, x, y, p0=p0, maxfev=20000)
    return float(2 * np.pi / abs(params[3]))


# -- experiments ------------------------------------------------------------

def fringe_scan_experiment(spec: CascadeSpec, signal_in: Envelope, which_mirror: str,
                           displacements, s_step_ratio: float = 1.0, map_fn=map) -> ExperimentResult:
    rows = fringe_scan(spec, which_mirror, displacements, signal_in, s_step_ratio, map_fn)
    ce = np.array([r[1] for r in rows])
    summary = {"max_ce": float(ce.max()), "min_ce": float(ce.min())}
    if ce.max() + ce.min() > 0:
        summary["visibility"] = fringe_visibility(ce)
    try:
        summary["period_nm"] = fringe_period(np.array([r[0] for r in rows]), ce)
    except (RuntimeError, ValueError):
        logger.warning("fringe period fit failed")
    return ExperimentResult("fringe_scan", ("displacement_nm", "ce"), rows,
                            {"mirror": Mirror(which_mirror).value, "s_step_ratio": s_step_ratio}, summary)


def two_stage_peak(stage: StageSpec, signal_in: Envelope, gamma_eff: float) -> float:
    return peak_ce(CascadeSpec.symmetric(stage.with_effective_strength(gamma_eff)), signal_in)[0]


def calibrate_two_stage(stage: StageSpec, signal_in: Envelope, max_strength: float = 2.0,
                        xatol: float = 1e-4) -> tuple[float, float]:
    """Per-stage effective strength maximizing the two-stage peak CE (first maximum)."""
    grid = np.linspace(0.1, max_strength, 20)
    values = [two_stage_peak(stage, signal_in, g) for g in grid]
    k = int(np.argmax(values))
    # first local maximum on the coarse grid
    for i in range(1, len(values) - 1):
        if values[i] >= values[i - 1] and values[i] >= values[i + 1]:
            k = i
            break
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda g: -two_stage_peak(stage, signal_in, g),
                                   bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    if not res.success:
        raise CalibrationError(f"two-stage calibration failed: {res.message}")
    return float(res.x), float(-res.fun)


def peak_ce_matrix(stage: StageSpec, pumps=("p0", "p1", "p2"), signals=("s0", "s1", "s2"),
                   bandwidth: float | None = None, signal_wavelength: float = 812.2,
                   basis: str = FOURIER, n_eff: int | None = None, map_fn=map) -> ExperimentResult:
    """Bright-fringe CE for every pump/signal shape pair plus a single-stage baseline.

    For each pump shape the per-stage strength is set where the shape-matched
    two-stage peak CE is largest. The baseline is the single-stage CE of the
    leading Schmidt mode at the same total pump energy (gamma * sqrt 2).
    """
    bandwidth = 1.0 / stage.tau_p if bandwidth is None else bandwidth
    sig = [signal_envelope(lab, stage, bandwidth, signal_wavelength) for lab in signals]

    def row_block(j):
        st = stage.with_pump(pump_envelope(pumps[j], stage, bandwidth))
        matched = sig[j] if j < len(sig) else sig[0]
        g_eff, _ = calibrate_two_stage(st, matched)
        st = st.with_effective_strength(g_eff)
        single = assemble(st.with_gamma(st.gamma * np.sqrt(2)), basis, n_eff)
        baseline = float(np.linalg.svd(single.G_rs, compute_uv=False)[0] ** 2)
        spec = CascadeSpec.symmetric(st)
        return [(float(j), float(k), g_eff, peak_ce(spec, s)[0], baseline) for k, s in enumerate(sig)]

    blocks = list(map_fn(row_block, range(len(pumps))))
    rows = [r for block in blocks for r in block]
    matrix = np.array([[r[3] for r in block] for block in blocks])
    diag_dominant = all(matrix[j, j] > max(np.delete(matrix[j], j)) for j in range(min(matrix.shape)))
    summary = {
        "max_ce": float(matrix.max()),
        "diagonally_dominant": bool(diag_dominant),
        "diagonal": [float(matrix[j, j]) for j in range(min(matrix.shape))],
        "baseline": [float(block[0][4]) for block in blocks],
    }
    return ExperimentResult("peak_ce_matrix",
                            ("pump_index", "signal_index", "gamma_eff", "peak_ce", "baseline_schmidt_ce"),
                            rows, {"pumps": list(pumps), "signals": list(signals)}, summary)


def _stage2_probe(stage1: StageSpec, gamma2: float) -> tuple[CascadeSpec, StageSpec]:
    spec = CascadeSpec.symmetric(stage1, gamma2=gamma2)
    return spec, effective_stage2(spec)


def stage2_scan(stage1: StageSpec, signal_in: Envelope, arm: str, offsets, gamma2: float,
                map_fn=map) -> list[tuple[float, float]]:
    """Stage-2-only CE versus extra delay of one arm, the other arm blocked.

    For the signal arm the CE is the depletion of the signal-mid pulse that
    enters stage 2; for the register arm it is the depletion of register-mid
    (back-conversion).
    """
    first = propagate(stage1, signal_in)
    spec, stage2 = _stage2_probe(stage1, gamma2)
    base = resolve_delays(spec)

    def point(x):
        if arm == "s":
            s2 = apply_delay(first.signal_out, base.signal + x)
            out = propagate(stage2, s2, first.register_out.scaled(0))
            return float(x), 1.0 - squared_norm(out.signal_out) / squared_norm(s2)
        r2 = apply_delay(first.register_out, base.register + x)
        out = propagate(stage2, first.signal_out.scaled(0), r2)
        return float(x), 1.0 - squared_norm(out.register_out) / squared_norm(r2)

    return list(map_fn(point, [float(x) for x in offsets]))


def delay_scan_widths(stage1: StageSpec, signal_in: Envelope, which_arm: str = "both",
                      gamma2_ratio: float = 0.1, s_range: float = 3000.0, r_range: float | None = None,
                      n_delays: int = 121, map_fn=map) -> ExperimentResult:
    """Cross-correlation scans of pump 2 against signal-mid and register-mid.

    Estimators (both exact for their idealized pulses):

    * pump duration: RMS width of the signal-arm curve. The weak-probe CE is
      |<pump2, signal-mid(t - x)>|^2, which for Gaussian pulses of duration
      tau_p is exp(-x^2 / 2 tau_p^2).
    * walk-off time: area over peak of sqrt(CE) for the register arm. That
      amplitude curve is the correlation of register-mid with the stage-2
      acceptance window of length |beta_r - beta_s| L.
    """
    if not 0 < gamma2_ratio <= 0.1:
        raise ValueError("pump 2 must be a weak probe (gamma2_ratio in (0, 0.1])")
    if r_range is None:
        r_range = 1.48 * abs(stage1.walkoff)
    gamma2 = gamma2_ratio * stage1.gamma
    arms = ("s", "r") if which_arm == "both" else (which_arm,)
    rows = []
    summary = {}
    for arm in arms:
        half = s_range if arm == "s" else r_range
        offsets = np.linspace(-half, half, n_delays)
        scan = stage2_scan(stage1, signal_in, arm, offsets, gamma2, map_fn)
        x = np.array([p[0] for p in scan])
        y = np.array([p[1] for p in scan])
        rows.extend((0.0 if arm == "s" else 1.0, xi, yi) for xi, yi in zip(x, y))
        summary[f"fwhm_{arm}"] = fwhm(x, y)
        summary[f"rms_{arm}"] = moments(x, np.clip(y, 0, None))[1]
        summary[f"kurtosis_{arm}"] = kurtosis(x, y)
        if arm == "r":
            summary["walkoff_width_r"] = equivalent_width(x, np.sqrt(np.clip(y, 0, None)))
    if len(arms) == 2:
        summary["zeta_estimate"] = summary["walkoff_width_r"] / summary["rms_s"]
        summary["fwhm_ratio"] = summary["fwhm_r"] / summary["fwhm_s"]
    return ExperimentResult("delay_scan_widths", ("arm", "delay_fs", "ce"), rows,
                            {"arm_codes": {"s": 0, "r": 1}, "gamma2": gamma2}, summary)


def skew_vs_power(stage: StageSpec, signal_in: Envelope, gamma1_eff=(0.6, 0.9, 1.2, 1.5),
                  gamma2_eff: float | None = None, scan_range: float = 2500.0, n_delays: int = 51,
                  map_fn=map) -> ExperimentResult:
    """Stage-2 probe of the signal-mid pulse at several pump-1 strengths.

    ``probe_time_fs`` is minus the signal-arm delay offset, i.e. the time of
    the signal-mid pulse that pump 2 samples; the curve centroid therefore
    tracks the signal-mid temporal skew.
    """
    gamma1_eff = [float(g) for g in gamma1_eff]
    if gamma2_eff is None:
        gamma2_eff = 0.1 * min(g for g in gamma1_eff if g > 0)
    if any(gamma2_eff > 0.1 * g for g in gamma1_eff if g > 0):
        raise ValueError("gamma2_eff must stay below 0.1 * every gamma1_eff")
    gamma2 = stage.with_effective_strength(gamma2_eff).gamma
    offsets = np.linspace(-scan_range, scan_range, n_delays)
    rows = []
    centroids, widths = [], []
    for g1 in gamma1_eff:
        scan = stage2_scan(stage.with_effective_strength(g1), signal_in, "s", offsets, gamma2, map_fn)
        probe = np.array([-p[0] for p in scan])
        ce = np.array([p[1] for p in scan])
        order = np.argsort(probe)
        probe, ce = probe[order], ce[order]
        rows.extend((g1, t, c) for t, c in zip(probe, ce))
        c, w = moments(probe, np.clip(ce, 0, None))
        centroids.append(c)
        widths.append(w)
    summary = {"gamma1_eff": gamma1_eff, "centroid_fs": centroids, "rms_width_fs": widths,
               "gamma2_eff": gamma2_eff}
    return ExperimentResult("skew_vs_power", ("gamma1_eff", "probe_time_fs", "ce"), rows, {}, summary)


def _single_point(stage: StageSpec, g_eff: float, basis: str, n_eff):
    g = assemble(stage.with_effective_strength(g_eff), basis, n_eff)
    return selectivity_from_singulars(np.linalg.svd(g.G_rs, compute_uv=False))


def _double_point(stage: StageSpec, g_eff: float, basis: str, n_eff, ops: InterstageOps | None = None):
    from .cascade import compose, interstage_matrix

    spec = CascadeSpec.symmetric(stage.with_effective_strength(g_eff), ops)
    g1, g2 = stage_greens(spec, basis, n_eff)
    d_s, d_r = interstage_matrix(g1, spec)
    g = compose(g2, d_s, d_r, g1)
    return selectivity_from_singulars(np.linalg.svd(g.G_rs, compute_uv=False))


def _matched_selectivity(point, stage, grid, values, target, basis, n_eff):
    """Selectivity where CE_target crosses ``target`` on the rising branch."""
    ce = np.array([v.ce_target for v in values])
    above = np.nonzero(ce >= target)[0]
    if len(above) == 0 or above[0] == 0:
        return float("nan"), float("nan")
    k = above[0]
    root = optimize.brentq(lambda g: point(stage, g, basis, n_eff).ce_target - target,
                           grid[k - 1], grid[k], xtol=1e-6)
    return float(root), point(stage, root, basis, n_eff).selectivity


def _refined_max(point, stage, grid, values, basis, n_eff):
    s = np.array([v.selectivity for v in values])
    k = int(np.argmax(s))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda g: -point(stage, g, basis, n_eff).selectivity,
                                   bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
    best = max(float(-res.fun), float(s[k]))
    return float(res.x if best == -res.fun else grid[k]), best


def tradeoff_comparison(stage: StageSpec, single_grid=None, double_grid=None, ce_match: float = 0.9,
                        basis: str = FOURIER, n_eff: int | None = None, map_fn=map) -> ExperimentResult:
    """(CE_target, S) along effective-strength sweeps for one stage and for the cascade."""
    single_grid = np.linspace(0.1, 2.4, 24) if single_grid is None else np.asarray(single_grid, float)
    double_grid = np.linspace(0.1, 1.2, 23) if double_grid is None else np.asarray(double_grid, float)
    rows = []
    summary = {}
    for n_stages, point, grid in ((1, _single_point, single_grid), (2, _double_point, double_grid)):
        values = list(map_fn(lambda g: point(stage, g, basis, n_eff), grid))
        rows.extend((float(n_stages), float(g), v.ce_target, v.selectivity) for g, v in zip(grid, values))
        g_best, s_best = _refined_max(point, stage, grid, values, basis, n_eff)
        g_match, s_match = _matched_selectivity(point, stage, grid, values, ce_match, basis, n_eff)
        key = "single" if n_stages == 1 else "two_stage"
        summary[f"{key}_max_selectivity"] = s_best
        summary[f"{key}_best_gamma_eff"] = g_best
        summary[f"{key}_selectivity_at_ce_match"] = s_match
        summary[f"{key}_gamma_eff_at_ce_match"] = g_match
    summary["ce_match"] = ce_match
    return ExperimentResult("tradeoff_comparison", ("stages", "gamma_eff", "ce_target", "selectivity"),
                            rows, {}, summary)


def _arm_contributions(spec: CascadeSpec, signal_in: Envelope) -> tuple[np.ndarray, np.ndarray]:
    """Stage-2 signal outputs from the signal arm alone and the register arm alone."""
    first = propagate(spec.stage1, signal_in)
    base = spec.with_ops(phase_s=0.0, phase_r=0.0, pump2_phase=0.0)
    s2, r2 = interstage(base, first.signal_out, first.register_out)
    stage2 = effective_stage2(base)
    x = propagate(stage2, s2, r2.scaled(0)).signal_out.samples
    y = propagate(stage2, s2.scaled(0), r2).signal_out.samples
    return x, y


def power_visibility(spec: CascadeSpec, signal_in: Envelope) -> float:
    """Visibility of the output-signal power fringe over the net phase.

    With arm contributions x (signal arm) and y (register arm) the output is
    |x + exp(-i Phi) y|^2, so V = 2 |<x, y>| / (|x|^2 + |y|^2).
    """
    x, y = _arm_contributions(spec, signal_in)
    xx = np.vdot(x, x).real
    yy = np.vdot(y, y).real
    return float(2 * abs(np.vdot(x, y)) / (xx + yy))


def balance_strength(stage: StageSpec, signal_in: Envelope, lo: float = 0.3, hi: float = 1.2) -> float:
    """Effective strength at which both arms reach the output with equal power.

    For a single-mode stage this is the 50% beamsplitter; with temporal
    multimode structure it shifts slightly. Only there does equal loss in
    the two arms maximize the fringe visibility.
    """
    def imbalance(g_eff):
        x, y = _arm_contributions(CascadeSpec.symmetric(stage.with_effective_strength(g_eff)), signal_in)
        return np.vdot(x, x).real - np.vdot(y, y).real

    return float(optimize.brentq(imbalance, lo, hi, xtol=1e-8))


def visibility_vs_imbalance(spec: CascadeSpec, signal_in: Envelope, loss_product: float = 0.64,
                            imbalance=None, map_fn=map) -> ExperimentResult:
    """Fringe visibility as the arm transmissions are unbalanced at fixed product.

    ``imbalance`` values r set transmission_s = sqrt(P) * r and
    transmission_r = sqrt(P) / r (each clipped to 1).
    """
    if imbalance is None:
        imbalance = 1.25 ** np.linspace(-1, 1, 19)
    root = np.sqrt(loss_product)

    def point(r):
        t_s = min(1.0, root * r)
        t_r = min(1.0, root / r)
        moved = spec.with_ops(transmission_s=t_s, transmission_r=t_r)
        return (float(r), t_s, t_r, power_visibility(moved, signal_in))

    rows = list(map_fn(point, [float(r) for r in imbalance]))
    v = np.array([r[3] for r in rows])
    k = int(np.argmax(v))
    summary = {"max_visibility": float(v[k]), "best_imbalance": rows[k][0],
               "gamma_eff": float(spec.stage1.effective_strength)}
    return ExperimentResult("visibility_vs_imbalance",
                            ("imbalance", "transmission_s", "transmission_r", "visibility"), rows, {}, summary)
