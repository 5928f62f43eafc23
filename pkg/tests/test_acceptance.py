"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from tmqfc.cascade import CascadeSpec, InterstageOps, fringe_scan, phase_scan, run_cascade
from tmqfc.cli import main
from tmqfc.experiments import (balance_strength, delay_scan_widths, fringe_period, peak_ce_matrix,
                               power_visibility, skew_vs_power, tradeoff_comparison)
from tmqfc.green import FOURIER, assemble
from tmqfc.grid import inner_product, register_wavelength, squared_norm
from tmqfc.io import dump_matrix, load_matrix
from tmqfc.oracle import reference_propagate
from tmqfc.propagator import StageSpec, calibrate_gamma, propagate, propagate_arrays
from tmqfc.schmidt import schmidt_decompose

from conftest import BETA_P, BETA_S, L_MM, flat_pump, gaussian_pump, signal_shape


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, started):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail} ({time.time() - started:.1f} s)"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def zeta_stage(grid, zeta, pump_label="p0", sign=1):
    pump = gaussian_pump(grid, pump_label)
    return StageSpec(L_MM, BETA_P, BETA_S, BETA_S + sign * zeta * 500.0 / L_MM, 0.0, pump)


def test_c01_unitarity_and_conservation(std_grid, report):
    t0 = time.time()
    rng = np.random.default_rng(20241)
    worst_norm = worst_unitary = 0.0
    s_in = signal_shape(std_grid)
    for _ in range(20):
        zeta = rng.uniform(2, 15)
        g_eff = rng.uniform(0.1, 3)
        stage = zeta_stage(std_grid, zeta).with_effective_strength(g_eff)
        out = propagate(stage, s_in)
        norm = squared_norm(out.signal_out) + squared_norm(out.register_out)
        worst_norm = max(worst_norm, abs(norm - 1.0))
        worst_unitary = max(worst_unitary, assemble(stage, FOURIER).unitarity_defect())
    ok = worst_norm < 1e-9 and worst_unitary < 1e-6 and time.time() - t0 < 120
    report(1, "unitarity & conservation", ok,
           f"max |norm-1| = {worst_norm:.2e}, max unitarity defect = {worst_unitary:.2e}", t0)


def test_c02_oracle_equivalence(std_stage, signal0, report):
    t0 = time.time()
    a_s0 = signal0.samples
    a_r0 = np.zeros_like(a_s0)
    ref_s, ref_r = reference_propagate(std_stage, a_s0, a_r0, refinement=16)

    def error(n_z):
        st = StageSpec(std_stage.length, std_stage.beta_p, std_stage.beta_s, std_stage.beta_r, std_stage.gamma,
                       std_stage.pump, n_z_steps=n_z)
        a_s, a_r = propagate_arrays(st, a_s0, a_r0)
        return max(np.max(np.abs(a_s - ref_s)), np.max(np.abs(a_r - ref_r)))

    e512, e256 = error(512), error(256)
    ratio = e256 / e512
    ok = e512 < 1e-5 and 3.5 <= ratio <= 4.5 and time.time() - t0 < 60
    report(2, "oracle equivalence", ok, f"max error {e512:.2e} at 512 steps, halving ratio {ratio:.3f}", t0)


def test_c03_single_mode_ramsey(std_grid, signal0, report):
    t0 = time.time()
    gamma = (np.pi / 4) * np.sqrt(std_grid.span) / L_MM
    stage = StageSpec(L_MM, 0.0, 3.0, 3.0, gamma, flat_pump(std_grid), n_z_steps=32)
    single = 1 - squared_norm(propagate(stage, signal0).signal_out)
    bright = run_cascade(CascadeSpec.symmetric(stage, InterstageOps(pump2_phase=0.0)), signal0).ce
    dark = run_cascade(CascadeSpec.symmetric(stage, InterstageOps(pump2_phase=np.pi)), signal0).ce
    ok = abs(single - 0.5) < 1e-6 and abs(bright - 1) < 1e-6 and abs(dark) < 1e-6
    report(3, "single-mode Ramsey", ok, f"stage CE {single:.9f}, bright {bright:.9f}, dark {dark:.2e}", t0)


def test_c04_net_phase_law(std_stage, signal0, report):
    t0 = time.time()
    # phase paths that keep pump2 + phi_s - phi_r fixed at 0.8
    paths = [InterstageOps(pump2_phase=0.8),
             InterstageOps(phase_s=0.8),
             InterstageOps(phase_r=-0.8),
             InterstageOps(phase_s=2.0, phase_r=1.2),
             InterstageOps(pump2_phase=-1.0, phase_s=3.0, phase_r=1.2)]
    ce = [run_cascade(CascadeSpec.symmetric(std_stage, ops), signal0).ce for ops in paths]
    spread = float(np.ptp(ce))
    phases = np.linspace(0, 4 * np.pi, 41)
    scan = phase_scan(CascadeSpec.symmetric(std_stage), signal0, phases)
    phase_period = fringe_period(phases, np.array([r[1] for r in scan]))
    spec = CascadeSpec.symmetric(std_stage)
    s_rows = fringe_scan(spec, "s", np.linspace(0, 1000, 41), signal0)
    r_rows = fringe_scan(spec, "r", np.linspace(0, 500, 41), signal0)
    period_s = fringe_period(*map(np.array, zip(*s_rows)))
    period_r = fringe_period(*map(np.array, zip(*r_rows)))
    half_s = 812.2 / 2
    half_r = register_wavelength(821.0, 812.2) / 2
    ok = (spread < 1e-9 and abs(phase_period - 2 * np.pi) < 1e-6
          and abs(period_s / half_s - 1) < 0.02 and abs(period_r / half_r - 1) < 0.02
          and time.time() - t0 < 60)
    report(4, "net-phase law", ok,
           f"CE spread on fixed net phase {spread:.1e}, phase period {phase_period:.9f}, "
           f"s-mirror period {period_s:.2f} nm (λs/2 {half_s:.2f}), "
           f"r-mirror period {period_r:.2f} nm (λr/2 {half_r:.2f})", t0)


def test_c05_perturbative_mode_is_pump(std_grid, report):
    t0 = time.time()
    overlaps = []
    for label in ("p0", "p1", "p2"):
        stage = zeta_stage(std_grid, 10.0, label).with_effective_strength(0.05)
        sd = schmidt_decompose(assemble(stage, FOURIER), 1)
        overlaps.append(abs(inner_product(stage.pump, sd.input_modes[0])) ** 2)
    ok = min(overlaps) > 0.98 and time.time() - t0 < 120
    report(5, "perturbative Schmidt mode", ok,
           "|<psi1, pump>|^2 = " + ", ".join(f"{v:.4f}" for v in overlaps), t0)


def test_c06_selectivity_enhancement(base_stage, report):
    t0 = time.time()
    r = tradeoff_comparison(base_stage)
    s = r.summary
    single, double = s["single_max_selectivity"], s["two_stage_max_selectivity"]
    m1, m2 = s["single_selectivity_at_ce_match"], s["two_stage_selectivity_at_ce_match"]
    ok = 0.75 <= single <= 0.85 and double >= single + 0.05 and m2 > m1 and time.time() - t0 < 600
    report(6, "selectivity enhancement", ok,
           f"max S single {single:.4f}, two-stage {double:.4f}; at CE 0.9: {m1:.4f} vs {m2:.4f}", t0)


def test_c07_shape_matrix(base_stage, report):
    t0 = time.time()
    r = peak_ce_matrix(base_stage)
    m = np.array([[row[3] for row in r.rows[3 * j:3 * j + 3]] for j in range(3)])
    baseline = np.array(r.summary["baseline"])
    dominant = all(m[j, j] > np.delete(m[j], j).max() for j in range(3))
    above = bool(np.all(np.diag(m) >= baseline))
    off_ok = not (m[0, 0] > 0.8) or m[0, 1] < 0.15
    ok = dominant and above and off_ok and np.all((m >= 0) & (m <= 1)) and time.time() - t0 < 600
    rows = "; ".join(" ".join(f"{v:.3f}" for v in row) for row in m)
    report(7, "shape matrix", ok,
           f"peak CE [{rows}], single-stage baseline {' '.join(f'{b:.3f}' for b in baseline)}", t0)


def test_c08_zeta_estimation(wide_grid, report):
    t0 = time.time()
    stage = zeta_stage(wide_grid, 10.0)
    s_in = signal_shape(wide_grid)
    stage = stage.with_gamma(calibrate_gamma(stage, s_in, 0.5))
    s = delay_scan_widths(stage, s_in).summary
    ok = (8 <= s["zeta_estimate"] <= 12 and s["kurtosis_r"] < 3.0 and abs(s["kurtosis_s"] - 3.0) < 0.15
          and time.time() - t0 < 120)
    report(8, "zeta estimation", ok,
           f"zeta estimate {s['zeta_estimate']:.2f} (FWHM ratio {s['fwhm_ratio']:.2f}), "
           f"kurtosis r {s['kurtosis_r']:.3f}, s {s['kurtosis_s']:.3f}", t0)


def test_c09_skew_direction(wide_grid, report):
    t0 = time.time()
    s_in = signal_shape(wide_grid)
    results = {}
    for sign in (1, -1):
        results[sign] = skew_vs_power(zeta_stage(wide_grid, 10.0, sign=sign), s_in).summary
    c_pos = np.array(results[1]["centroid_fs"])
    w_pos = np.array(results[1]["rms_width_fs"])
    c_neg = np.array(results[-1]["centroid_fs"])
    ok = (np.all(np.diff(c_pos) < 0) and np.all(np.diff(w_pos) < 0) and np.all(np.diff(c_neg) > 0)
          and time.time() - t0 < 120)
    report(9, "skew direction", ok,
           f"centroids {np.round(c_pos, 1).tolist()} fs, widths {np.round(w_pos, 1).tolist()} fs; "
           f"flipped centroids {np.round(c_neg, 1).tolist()} fs", t0)


def test_c10_loss_visibility(base_stage, signal0, report):
    t0 = time.time()
    stage = base_stage.with_effective_strength(balance_strength(base_stage, signal0))

    def vis(t_s, t_r):
        return power_visibility(CascadeSpec.symmetric(stage, InterstageOps(transmission_s=t_s,
                                                                           transmission_r=t_r)), signal0)

    equal, lopsided = vis(0.8, 0.8), vis(1.0, 0.64)
    sweep = [vis(min(1, 0.8 * r), min(1, 0.8 / r)) for r in 1.25 ** np.linspace(-1, 1, 9)]
    ok = equal > lopsided and int(np.argmax(sweep)) == 4 and time.time() - t0 < 60
    report(10, "loss/visibility", ok,
           f"V(0.8, 0.8) {equal:.4f} > V(1.0, 0.64) {lopsided:.4f}; sweep peak at index "
           f"{int(np.argmax(sweep))} of 9", t0)


FRINGE = """
[grid]
n_points = 1024

[experiment]
name = "fringe_scan"
n_points = 11
stop_nm = 500.0
"""


def test_c11_determinism_and_io(tmp_path, std_stage, report):
    t0 = time.time()
    cfg = tmp_path / "run.toml"
    cfg.write_text(FRINGE)
    codes = [main([str(cfg), "--out", str(tmp_path / d), *extra])
             for d, extra in (("a", []), ("b", []), ("c", ["--threads", "4"]))]
    tables = [(tmp_path / d / "fringe_scan.csv").read_bytes() for d in "abc"]
    g = assemble(std_stage, FOURIER)
    dump_matrix(g, tmp_path / "g.bin")
    back = load_matrix(tmp_path / "g.bin")
    exact = all(np.array_equal(getattr(back, n), getattr(g, n)) for n in ("G_ss", "G_sr", "G_rs", "G_rr"))
    ok = codes == [0, 0, 0] and tables[0] == tables[1] == tables[2] and exact
    report(11, "determinism & I/O", ok,
           f"exit codes {codes}, tables identical {tables[0] == tables[1] == tables[2]}, "
           f"matrix round-trip bit-exact {exact}", t0)
