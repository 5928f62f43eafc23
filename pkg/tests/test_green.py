import numpy as np
import pytest

from tmqfc.errors import GridMismatchError
from tmqfc.green import (DELTA, FOURIER, GreenFunction, apply, assemble, first_order_kernel,
                         resample)
from tmqfc.grid import Band, TemporalGrid, delay_samples, squared_norm, zeros
from tmqfc.propagator import StageSpec, conversion_efficiency, propagate

from conftest import L_MM, gaussian_pump, signal_shape


@pytest.fixture(scope="module")
def std_green(std_stage):
    return assemble(std_stage, FOURIER)


@pytest.fixture(scope="module")
def small():
    grid = TemporalGrid.centered(256, 20000.0)
    stage = StageSpec(L_MM, 0.0, 8.0, 1008.0, 0.0, gaussian_pump(grid), n_z_steps=128)
    return grid, stage.with_effective_strength(0.9)


def test_fourier_basis_unitary(std_green):
    assert std_green.unitarity_defect() < 1e-9
    assert std_green.n_basis == 512


def test_apply_matches_propagate(std_stage, std_green, signal0, std_grid):
    reg = zeros(std_grid, Band.REGISTER, std_green.register_wavelength)
    s_g, r_g = apply(std_green, signal0, reg)
    out = propagate(std_stage, signal0, reg)
    assert np.max(np.abs(s_g.samples - out.signal_out.samples)) < 1e-9
    assert np.max(np.abs(r_g.samples - out.register_out.samples)) < 1e-9


def test_bases_agree_on_in_band_ce(small):
    grid, stage = small
    s_in = signal_shape(grid)
    reg = zeros(grid, Band.REGISTER, 408.288)
    ce = []
    for basis, n in ((DELTA, None), (FOURIER, 128)):
        g = assemble(stage, basis, n)
        out_s, _ = apply(g, s_in, reg)
        ce.append(1 - squared_norm(out_s))
    assert abs(ce[0] - ce[1]) < 1e-6
    assert abs(ce[0] - conversion_efficiency(stage, s_in)) < 1e-10


def test_delta_basis_unitary(small):
    _, stage = small
    assert assemble(stage, DELTA).unitarity_defect() < 1e-10


def test_zero_coupling_blocks(small):
    grid, stage = small
    g = assemble(stage.with_gamma(0.0), DELTA)
    assert np.max(np.abs(g.G_sr)) < 1e-14 and np.max(np.abs(g.G_rs)) < 1e-14
    shift = delay_samples(np.eye(grid.n_points), grid, stage.v_r * stage.length)
    assert np.max(np.abs(g.G_rr - shift)) < 1e-10


def test_first_order_kernel_is_weak_coupling_limit(small):
    # closed-form kernel of the time-sampled equations; the split-step G_rs
    # approaches it as dz^2 once gamma is small enough
    _, stage = small
    residual = []
    for n_z in (128, 512):
        st = StageSpec(L_MM, 0.0, 8.0, 1008.0, 0.0, stage.pump, n_z_steps=n_z).with_effective_strength(0.005)
        kernel = first_order_kernel(st, DELTA)
        exact = assemble(st, DELTA).G_rs
        residual.append(np.linalg.norm(exact - kernel) / np.linalg.norm(kernel))
    assert residual[1] < 3e-4
    assert 14 < residual[0] / residual[1] < 18


def test_resample_round_trip():
    grid = TemporalGrid.centered(1024, 20000.0)
    x = signal_shape(grid).samples
    coarse = resample(x, 256)
    assert np.max(np.abs(resample(coarse, 1024) - x)) < 1e-12


def test_identity_and_shape_checks(std_grid, signal0):
    g = GreenFunction.identity(std_grid, FOURIER, 64)
    assert g.unitarity_defect() == 0
    with pytest.raises(ValueError):
        GreenFunction(std_grid, np.eye(3), np.eye(3), np.eye(3), np.eye(4), FOURIER)
    other = TemporalGrid.centered(2048, 30000.0)
    reg = zeros(other, Band.REGISTER, 408.288)
    with pytest.raises(GridMismatchError):
        apply(g, signal_shape(other), reg)
