"""Build simulation objects from a resolved RunConfig and run its experiment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import __version__
from .cascade import CascadeSpec, InterstageOps
from .config import AUTO, RunConfig
from .experiments import (ExperimentResult, balance_strength, delay_scan_widths, fringe_scan_experiment,
                          peak_ce_matrix, skew_vs_power, tradeoff_comparison, visibility_vs_imbalance)
from .green import GreenFunction, assemble
from .grid import Band, Envelope, TemporalGrid, inner_product
from .propagator import StageSpec, calibrate_gamma
from .schmidt import schmidt_decompose, selectivity
from .shapes import ShapeSpec, make_shape_temporal


@dataclass(frozen=True, eq=False)
class Setup:
    """Grid, uncalibrated stage (gamma = 0) and input signal of a run."""

    grid: TemporalGrid
    stage: StageSpec
    signal: Envelope


def build_setup(cfg: RunConfig) -> Setup:
    grid = TemporalGrid.centered(cfg.grid.n_points, cfg.grid.span_fs)
    bw = cfg.pump_bandwidth
    pump = make_shape_temporal(ShapeSpec.from_label(cfg.pump.shape, bw), grid, Band.PUMP, cfg.pump.wavelength_nm)
    signal = make_shape_temporal(ShapeSpec.from_label(cfg.signal.shape, bw), grid, Band.SIGNAL,
                                 cfg.signal.wavelength_nm)
    beta_p, beta_s, beta_r = cfg.medium.slownesses()
    stage = StageSpec(cfg.medium.length_mm, beta_p, beta_s, beta_r, 0.0, pump,
                      cfg.medium.n_z_steps, cfg.pump.phase)
    return Setup(grid, stage, signal)


def calibrated_stage(cfg: RunConfig, setup: Setup) -> StageSpec:
    if cfg.pump.gamma_eff is not None:
        return setup.stage.with_effective_strength(cfg.pump.gamma_eff)
    return setup.stage.with_gamma(calibrate_gamma(setup.stage, setup.signal, cfg.pump.ce_target))


def build_ops(cfg: RunConfig) -> InterstageOps:
    c = cfg.cascade
    return InterstageOps(
        c.phase_s, c.phase_r, c.pump2_phase,
        None if c.delay_s == AUTO else c.delay_s,
        None if c.delay_r == AUTO else c.delay_r,
        c.transmission_s, c.transmission_r,
    )


def _sweep(triple) -> np.ndarray:
    start, stop, count = triple
    return np.linspace(float(start), float(stop), int(count))


def schmidt_modes(stage: StageSpec, basis: str, n_eff: int, n_kept: int, n_modes: int) -> ExperimentResult:
    g = assemble(stage, basis, n_eff)
    sd = schmidt_decompose(g, max(n_kept, n_modes))
    rep = selectivity(sd)
    rows = []
    for k in range(n_modes):
        overlap = abs(inner_product(stage.pump, sd.input_modes[k])) ** 2
        tau = float(sd.conversion_singulars[k])
        rows.append((k, tau, tau ** 2, overlap))
    summary = {"ce_target": rep.ce_target, "purity": rep.purity, "selectivity": rep.selectivity,
               "truncation_error": sd.truncation_error, "unitarity_defect": g.unitarity_defect()}
    return ExperimentResult("schmidt_modes", ("mode", "singular_value", "conversion", "pump_overlap"),
                            rows, {}, summary)


def run_experiment(cfg: RunConfig, map_fn=map) -> tuple[ExperimentResult, StageSpec]:
    """Execute the configured experiment; returns the result and the stage-1 spec used."""
    setup = build_setup(cfg)
    name = cfg.experiment.name
    p = cfg.experiment.params
    num = cfg.numerics
    if name == "fringe_scan":
        stage = calibrated_stage(cfg, setup)
        spec = CascadeSpec(stage, stage, build_ops(cfg))
        xs = np.linspace(p["start_nm"], p["stop_nm"], p["n_points"])
        result = fringe_scan_experiment(spec, setup.signal, p["mirror"], xs, p["s_step_ratio"], map_fn)
    elif name == "peak_ce_matrix":
        stage = setup.stage
        result = peak_ce_matrix(stage, tuple(p["pumps"]), tuple(p["signals"]), cfg.pump_bandwidth,
                                cfg.signal.wavelength_nm, num.basis, num.n_eff, map_fn)
    elif name == "delay_scan_widths":
        stage = calibrated_stage(cfg, setup)
        r_range = None if p["r_range_fs"] == AUTO else p["r_range_fs"]
        result = delay_scan_widths(stage, setup.signal, p["arm"], p["gamma2_ratio"], p["s_range_fs"],
                                   r_range, p["n_delays"], map_fn)
    elif name == "skew_vs_power":
        stage = setup.stage
        result = skew_vs_power(stage, setup.signal, p["gamma1_eff"], p["gamma2_eff"], p["range_fs"],
                               p["n_delays"], map_fn)
    elif name == "tradeoff_comparison":
        stage = setup.stage
        result = tradeoff_comparison(stage, _sweep(p["single_gamma_eff"]), _sweep(p["double_gamma_eff"]),
                                     p["ce_match"], num.basis, num.n_eff, map_fn)
    elif name == "visibility_vs_imbalance":
        if p["operating_point"] == "balanced":
            stage = setup.stage.with_effective_strength(balance_strength(setup.stage, setup.signal))
        else:
            stage = calibrated_stage(cfg, setup)
        spec = CascadeSpec(stage, stage, build_ops(cfg))
        imbalance = p["max_imbalance"] ** np.linspace(-1, 1, p["n_points"])
        result = visibility_vs_imbalance(spec, setup.signal, p["loss_product"], imbalance, map_fn)
    elif name == "schmidt_modes":
        stage = calibrated_stage(cfg, setup)
        result = schmidt_modes(stage, num.basis, num.n_eff, num.n_kept, p["n_modes"])
    else:
        raise ValueError(f"unknown experiment {name!r}")
    return result, stage


def derived_quantities(cfg: RunConfig, stage: StageSpec) -> dict:
    beta_p, beta_s, beta_r = cfg.medium.slownesses()
    out = {
        "version": __version__,
        "register_wavelength_nm": cfg.register_wavelength,
        "beta_p": beta_p,
        "beta_s": beta_s,
        "beta_r": beta_r,
        "tau_p_fs": stage.tau_p,
        "zeta": stage.zeta,
        "walkoff_fs": stage.walkoff,
    }
    if stage.gamma > 0:
        out["gamma"] = stage.gamma
        out["gamma_eff"] = stage.effective_strength
    return out


def stage_green(cfg: RunConfig, stage: StageSpec) -> GreenFunction:
    return assemble(stage, cfg.numerics.basis, cfg.numerics.n_eff, cfg.signal.wavelength_nm)
