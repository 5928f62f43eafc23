import numpy as np
import pytest

from tmqfc.grid import Band, Envelope, TemporalGrid
from tmqfc.propagator import StageSpec, calibrate_gamma
from tmqfc.shapes import ShapeSpec, make_shape_temporal

# ζ = 10 reference medium: L = 5 mm, walk-off 5000 fs, pump-signal walk-off 40 fs
L_MM = 5.0
BETA_P, BETA_S, BETA_R = 0.0, 8.0, 1008.0


def gaussian_pump(grid, label="p0"):
    return make_shape_temporal(ShapeSpec.from_label(label), grid, Band.PUMP, 821.0)


def signal_shape(grid, label="s0"):
    return make_shape_temporal(ShapeSpec.from_label(label), grid, Band.SIGNAL, 812.2)


def flat_pump(grid):
    """Constant pump filling the grid: every time slot sees the same rotation."""
    samples = np.full(grid.n_points, 1 / np.sqrt(grid.span), dtype=complex)
    return Envelope(grid, Band.PUMP, 821.0, samples)


@pytest.fixture(scope="session")
def std_grid():
    return TemporalGrid.centered(2048, 20000.0)


@pytest.fixture(scope="session")
def wide_grid():
    return TemporalGrid.centered(2048, 40000.0)


@pytest.fixture(scope="session")
def pump0(std_grid):
    return gaussian_pump(std_grid)


@pytest.fixture(scope="session")
def signal0(std_grid):
    return signal_shape(std_grid)


@pytest.fixture(scope="session")
def base_stage(pump0):
    return StageSpec(L_MM, BETA_P, BETA_S, BETA_R, 0.0, pump0)


@pytest.fixture(scope="session")
def std_stage(base_stage, signal0):
    """Reference stage calibrated to 50% CE on the s0 input."""
    return base_stage.with_gamma(calibrate_gamma(base_stage, signal0, 0.5))
