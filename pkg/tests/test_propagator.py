import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmqfc.errors import CalibrationError, LeakageError
from tmqfc.grid import Band, TemporalGrid, delay_samples, squared_norm, zeros
from tmqfc.oracle import reference_propagate
from tmqfc.propagator import (StageSpec, calibrate_gamma, conversion_efficiency, propagate,
                              propagate_arrays)

from conftest import L_MM, flat_pump, gaussian_pump, signal_shape


@pytest.fixture(scope="module")
def small_grid():
    return TemporalGrid.centered(512, 20000.0)


def test_zero_coupling_is_pure_advection(std_grid, base_stage, signal0):
    reg = zeros(std_grid, Band.REGISTER, 408.288).with_samples(signal0.samples)
    out = propagate(base_stage, signal0, reg)
    expected_s = delay_samples(signal0.samples, std_grid, base_stage.v_s * L_MM)
    expected_r = delay_samples(signal0.samples, std_grid, base_stage.v_r * L_MM)
    assert np.max(np.abs(out.signal_out.samples - expected_s)) < 1e-12
    assert np.max(np.abs(out.register_out.samples - expected_r)) < 1e-12


def test_single_mode_limit_matches_rotation(std_grid, signal0):
    # flat pump and equal signal/register slowness: every slot rotates by gamma |A| L
    pump = flat_pump(std_grid)
    gamma = 0.7 * np.sqrt(std_grid.span) / L_MM
    stage = StageSpec(L_MM, 0.0, 3.0, 3.0, gamma, pump, n_z_steps=64)
    assert conversion_efficiency(stage, signal0) == pytest.approx(np.sin(0.7) ** 2, abs=1e-12)


@settings(max_examples=12, deadline=None)
@given(zeta=st.floats(2, 15), gamma_eff=st.floats(0.1, 3), phase=st.floats(-np.pi, np.pi))
def test_norm_conserved(zeta, gamma_eff, phase):
    grid = TemporalGrid.centered(512, 40000.0)
    pump = gaussian_pump(grid)
    stage = StageSpec(L_MM, 0.0, 8.0, 8.0 + zeta * 500.0 / L_MM, 0.0, pump, pump_phase=phase)
    stage = stage.with_effective_strength(gamma_eff)
    s_in = signal_shape(grid)
    r_in = zeros(grid, Band.REGISTER, 408.288).with_samples(0.5 * gaussian_pump(grid, "p1").samples)
    out = propagate(stage, s_in, r_in)
    total_in = squared_norm(s_in) + squared_norm(r_in)
    total_out = squared_norm(out.signal_out) + squared_norm(out.register_out)
    assert abs(total_out - total_in) < 1e-9


def test_batch_matches_single(small_grid):
    pump = gaussian_pump(small_grid)
    stage = StageSpec(L_MM, 0.0, 8.0, 1008.0, 10.0, pump, n_z_steps=64)
    rng = np.random.default_rng(3)
    x = rng.normal(size=(512, 3)) + 1j * rng.normal(size=(512, 3))
    bs, br = propagate_arrays(stage, x, np.zeros_like(x))
    for k in range(3):
        s, r = propagate_arrays(stage, x[:, k], np.zeros(512))
        assert np.max(np.abs(bs[:, k] - s)) < 1e-13
        assert np.max(np.abs(br[:, k] - r)) < 1e-13


def test_second_order_convergence_against_oracle(small_grid):
    pump = gaussian_pump(small_grid)
    s_in = signal_shape(small_grid).samples
    base = StageSpec(L_MM, 0.0, 8.0, 1008.0, 0.0, pump, n_z_steps=64).with_effective_strength(1.0)
    fine = StageSpec(L_MM, 0.0, 8.0, 1008.0, base.gamma, pump, n_z_steps=256)
    ref_s, ref_r = reference_propagate(fine, s_in, np.zeros(512), refinement=4)
    errors = []
    for n_z in (32, 64):
        st_n = StageSpec(L_MM, 0.0, 8.0, 1008.0, base.gamma, pump, n_z_steps=n_z)
        a_s, a_r = propagate_arrays(st_n, s_in, np.zeros(512))
        errors.append(max(np.max(np.abs(a_s - ref_s)), np.max(np.abs(a_r - ref_r))))
    assert 3.5 < errors[0] / errors[1] < 4.5


def test_calibration_hits_target(std_stage, signal0):
    # frozen value from an independent run of the bracketing search
    assert std_stage.gamma == pytest.approx(12.2619, abs=1e-3)
    assert std_stage.effective_strength == pytest.approx(0.8670, abs=1e-3)
    assert conversion_efficiency(std_stage, signal0) == pytest.approx(0.5, abs=1e-6)


def test_calibration_unreachable(base_stage, signal0):
    with pytest.raises(CalibrationError):
        calibrate_gamma(base_stage, signal0, 0.99, max_strength=0.5)


def test_calibration_zero_target(base_stage, signal0):
    assert calibrate_gamma(base_stage, signal0, 0.0) == 0.0


def test_mismatched_input_converts_less(std_stage, std_grid, signal0):
    s1 = signal_shape(std_grid, "s1")
    ce1 = conversion_efficiency(std_stage, s1)
    assert ce1 < conversion_efficiency(std_stage, signal0)
    assert ce1 == pytest.approx(0.0215, abs=5e-4)


def test_leakage_guard():
    grid = TemporalGrid.centered(1024, 9000.0)
    pump = gaussian_pump(grid)
    stage = StageSpec(L_MM, 0.0, 8.0, 1008.0, 10.0, pump)
    with pytest.raises(LeakageError, match="leakage"):
        propagate(stage, signal_shape(grid))


def test_stage_validation(pump0):
    with pytest.raises(ValueError):
        StageSpec(0.0, 0, 8, 1008, 1.0, pump0)
    with pytest.raises(ValueError):
        StageSpec(5.0, 0, 8, 1008, -1.0, pump0)
    with pytest.raises(ValueError):
        StageSpec(5.0, 0, 8, 1008, 1.0, pump0.scaled(2.0))
    with pytest.raises(ValueError):
        StageSpec(5.0, 0, 8, 8, 1.0, pump0).effective_strength


def test_derived_stage_quantities(base_stage):
    assert base_stage.walkoff == pytest.approx(5000.0)
    assert base_stage.tau_p == pytest.approx(500.0, rel=1e-9)
    assert base_stage.zeta == pytest.approx(10.0, rel=1e-9)
    g = base_stage.with_effective_strength(1.0)
    assert g.gamma == pytest.approx(np.sqrt(1000.0 / L_MM))
