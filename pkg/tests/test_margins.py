import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arealext import margins as mg
from arealext.margins import FitError

# mpmath, 30 digits: 10 + 5 * (10**0.2 - 1) / 0.1
RETURN_LEVEL_EXAMPLE = 39.24465962305567426


@pytest.mark.parametrize("sample, k, expected", [
    ([3, 1, 4, 1, 5], 2, 4), ([7, 7, 7], 3, 7), (list(range(1, 11)), 3, 8)])
def test_kth_largest(sample, k, expected):
    assert mg.kth_largest(sample, k) == expected


def test_kth_largest_range():
    with pytest.raises(FitError):
        mg.kth_largest([1, 2], 3)
    with pytest.raises(FitError):
        mg.kth_largest([1, 2], 0)


def test_moment_estimator_hand_example():
    sample = [math.e ** 2, math.e, 1.0]
    assert mg.moment_estimator(sample, 2) == pytest.approx(-2.5, abs=1e-12)
    assert mg.scale_estimator(sample, 2, -2.5) == pytest.approx(7.5, abs=1e-12)


def test_moment_estimator_pareto_grid():
    n, k = 100_000, 1_000
    grid = n / (np.arange(n) + 1.0)
    assert abs(mg.moment_estimator(grid, k) - 1.0) < 0.05


def test_moment_estimator_degenerate():
    with pytest.raises(FitError, match="degenerate"):
        mg.moment_estimator([5.0, 5.0, 5.0, 1.0], 2)


def test_scale_reduction_when_gamma_minus_is_zero():
    m1, _, x_ref = mg._log_moments([math.e ** 2, math.e, 1.0], 2)
    assert mg._scale_from(m1, x_ref, m1) == pytest.approx(x_ref * m1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 50.0), st.integers(0, 2**31))
def test_scale_equivariance(c, seed):
    x = np.random.default_rng(seed).pareto(3.0, 400) + 1.0
    g = mg.moment_estimator(x, 50)
    assert mg.moment_estimator(c * x, 50) == pytest.approx(g, abs=1e-9)
    assert mg.scale_estimator(c * x, 50, g) == pytest.approx(c * mg.scale_estimator(x, 50, g), rel=1e-9)


def test_fit_margins_frechet_panel():
    u = np.random.default_rng(7).random((10_000, 4))
    panel = -1.0 / np.log(u)
    fit = mg.fit_margins(panel, 125)
    assert 0.7 <= fit.gamma_pooled <= 1.3
    assert fit.gamma_pooled == sum(fit.gamma_local.tolist()) / 4
    assert np.all(fit.scale > 0)


def test_fit_margins_identical_columns():
    col = np.random.default_rng(1).pareto(4.0, 500)
    fit = mg.fit_margins(np.column_stack([col, col]), 50)
    assert fit.gamma_local[0] == fit.gamma_local[1]
    assert fit.scale[0] == fit.scale[1] and fit.shift[0] == fit.shift[1]
    assert fit.shift[0] == mg.kth_largest(col, 50)


def test_fit_margins_names_failing_station():
    panel = np.column_stack([np.random.default_rng(2).pareto(3.0, 50) + 1, np.ones(50)])
    with pytest.raises(FitError, match="station b"):
        mg.fit_margins(panel, 10, ("a", "b"))
    with pytest.raises(FitError):
        mg.fit_margins(panel, 50)


def test_gamma_scan_rows():
    panel = np.random.default_rng(3).pareto(2.0, (10, 2)) + 1
    assert [k for k, _ in mg.gamma_stability_scan(panel, 2, 3)] == [2, 3]


def test_gamma_scan_pareto_flat():
    n = 20_000
    grid = (n / (np.arange(n) + 1.0))[:, None].repeat(2, axis=1)
    rows = mg.gamma_stability_scan(grid, 200, 1000)
    assert max(abs(g - 1.0) for k, g in rows if 300 <= k <= 800) < 0.1


def test_return_level_example():
    # k/(n p) = 100 with k=125, n=2730
    p = 125 / (2730 * 100)
    assert mg.return_level(0.1, 5.0, 10.0, 125, 2730, p) == pytest.approx(RETURN_LEVEL_EXAMPLE, rel=1e-13)


def test_return_level_boundary_and_domain():
    assert mg.return_level(0.3, 4.0, 12.5, 125, 2730, 125 / 2730) == 12.5
    with pytest.raises(ValueError):
        mg.return_level(0.3, 4.0, 12.5, 125, 2730, 0.5)
    with pytest.raises(ValueError):
        mg.return_level(0.3, 4.0, 12.5, 125, 2730, 0.0)


def test_growth_gamma_zero_continuity():
    assert abs(mg._growth(5.0, 1e-9) - math.log(5.0)) < 1e-6


def _tail_model(gamma=0.1, scale=5.0):
    below = np.linspace(0.0, 10.0, 95)
    return mg.TailModel(10.0, below, 100, gamma, scale)


def test_mixed_tail_example():
    m = _tail_model()
    x = 10.0 + 5.0 * (2 ** 0.1 - 1) / 0.1
    assert m.tail_mass == pytest.approx(0.05)
    assert mg.mixed_tail_cdf(m, x) == pytest.approx(0.975, abs=1e-12)
    assert m.cdf(10.0) == pytest.approx(0.95)
    assert m.cdf(1e12) == pytest.approx(1.0, abs=1e-6)


def test_mixed_tail_negative_gamma_endpoint():
    m = _tail_model(gamma=-0.5, scale=2.0)
    assert m.cdf(10.0 + 4.0) == 1.0
    assert m.cdf(100.0) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.4, 0.6), st.lists(st.floats(-5, 60), min_size=2, max_size=30))
def test_mixed_tail_monotone(gamma, xs):
    m = _tail_model(gamma=gamma)
    xs = np.sort(np.array(xs))
    assert np.all(np.diff(m.cdf(xs)) >= -1e-15)


def test_tail_model_from_sample_and_sampling():
    rng = np.random.default_rng(5)
    x = rng.pareto(5.0, 5000) + 1.0
    m = mg.TailModel.from_sample(x, 250)
    assert m.threshold == mg.kth_largest(x, 250)
    # the empirical CDF at the threshold already counts the threshold itself
    assert m.tail_mass == pytest.approx(249 / 5000, abs=1e-12)
    draws = m.sample(rng, 20_000)
    frac = np.mean(draws > m.threshold)
    assert abs(frac - m.tail_mass) < 4 * math.sqrt(m.tail_mass / 20_000)
