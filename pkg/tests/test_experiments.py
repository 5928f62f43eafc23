import numpy as np
import pytest

from tmqfc.experiments import (ExperimentResult, equivalent_width, fringe_period, fwhm, kurtosis,
                               power_visibility)
from tmqfc.cascade import CascadeSpec, InterstageOps


def test_gaussian_profile_measures():
    x = np.linspace(-5000, 5000, 2001)
    y = np.exp(-x ** 2 / (2 * 500.0 ** 2))
    assert fwhm(x, y) == pytest.approx(2 * np.sqrt(2 * np.log(2)) * 500.0, rel=1e-4)
    assert kurtosis(x, y) == pytest.approx(3.0, abs=1e-6)
    assert equivalent_width(x, y) == pytest.approx(np.sqrt(2 * np.pi) * 500.0, rel=1e-9)


def test_triangle_is_platykurtic():
    x = np.linspace(-3000, 3000, 1201)
    y = np.clip(1 - np.abs(x) / 2000, 0, None)
    assert kurtosis(x, y) == pytest.approx(2.4, abs=1e-3)
    assert fwhm(x, y) == pytest.approx(2000.0, rel=1e-6)


def test_fwhm_needs_both_edges():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        fwhm(x, np.ones(11))


def test_fringe_period_fit():
    x = np.linspace(0, 1000, 81)
    y = 0.5 + 0.45 * np.cos(2 * np.pi * x / 406.1 + 0.3)
    assert fringe_period(x, y) == pytest.approx(406.1, rel=1e-8)


def test_result_rows_checked():
    r = ExperimentResult("t", ("a", "b"), [(1.0, 2.0), (3.0, 4.0)])
    assert list(r.column("b")) == [2.0, 4.0]
    with pytest.raises(ValueError):
        ExperimentResult("t", ("a", "b"), [(1.0,)])


def test_power_visibility_bounds(std_stage, signal0):
    v = power_visibility(CascadeSpec.symmetric(std_stage), signal0)
    assert 0.8 < v <= 1.0
    lossy = power_visibility(CascadeSpec.symmetric(std_stage, InterstageOps(transmission_r=0.3)), signal0)
    assert lossy < v
