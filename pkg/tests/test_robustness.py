import math

import numpy as np
import pytest

from qrwsearch.coins import DependenceLaw
from qrwsearch.errors import (
    ConfigurationError,
    DegenerateNormalizationError,
    EmptyCurveError,
    InsufficientResolutionError,
    InvariantError,
)
from qrwsearch.reference import load_reference, published_lambda
from qrwsearch.robustness import (
    ProbabilityCurve,
    capital_lambda,
    closed_grid,
    lambda_curves,
    lambda_report,
    phi_grid,
    robustness_epsilon,
    sweep_heatmap,
    sweep_phi,
)


def curve(phi, p, level="W", law="linear"):
    return ProbabilityCurve(m=6, law=law, level=level, phi=phi, p=p)


def test_phi_grid_is_symmetric_around_pi():
    grid = phi_grid(0.005)
    assert grid[0] > 0 and grid[-1] < 2 * math.pi
    assert np.any(grid == math.pi)
    np.testing.assert_allclose(grid + grid[::-1], 2 * math.pi, atol=1e-12)
    assert np.ptp(np.diff(grid)) < 1e-12
    assert grid.size == 2 * 628 + 1


def test_phi_grid_rejects_bad_step():
    with pytest.raises(ConfigurationError):
        phi_grid(0.0)
    with pytest.raises(ConfigurationError):
        phi_grid(4.0)


def test_closed_grid_includes_endpoint():
    grid = closed_grid(0.0, 2 * math.pi, math.pi / 4)
    assert grid.size == 9
    assert grid[-1] == pytest.approx(2 * math.pi)


def test_curve_validation():
    with pytest.raises(InvariantError, match="increasing"):
        curve([1.0, 0.5], [0.1, 0.1])
    with pytest.raises(InvariantError, match="uniform"):
        curve([0.1, 0.2, 0.4], [0.1, 0.1, 0.1])
    with pytest.raises(ConfigurationError):
        curve([0.1, 0.2], [0.1, 0.1], level="X")


def test_square_pulse_epsilon():
    phi = phi_grid(0.01)
    p = np.where(np.abs(phi - math.pi) < 0.3, 1.0, 0.0)
    report = robustness_epsilon(curve(phi, p))
    assert report.phi_max == pytest.approx(math.pi)
    assert report.p_max == 1.0
    assert report.epsilon == pytest.approx(0.3, abs=0.0101)


def test_constant_curve_reaches_domain_edge():
    phi = phi_grid(0.01)
    report = robustness_epsilon(curve(phi, np.full(phi.size, 0.5)))
    assert report.phi_max == pytest.approx(math.pi)
    assert report.epsilon == pytest.approx(math.pi)


def test_off_centre_peak_uses_nearer_edge():
    phi = phi_grid(0.01)
    p = np.where(phi < 1.0, 0.8, 0.1)
    p[5] = 0.9
    report = robustness_epsilon(curve(phi, p), omega=0.5)
    assert report.phi_max == pytest.approx(phi[5])
    assert report.epsilon == pytest.approx(phi[5])


def test_tie_break_prefers_pi():
    phi = phi_grid(0.01)
    p = np.full(phi.size, 0.2)
    i_pi = int(np.argmin(np.abs(phi - math.pi)))
    p[i_pi] = 0.7
    p[10] = 0.7
    report = robustness_epsilon(curve(phi, p))
    assert report.phi_max == pytest.approx(math.pi)
    assert report.epsilon == 0.0


def test_epsilon_decreases_with_omega(hill_curve):
    values = [robustness_epsilon(hill_curve, omega).epsilon for omega in (0.5, 0.7, 0.9, 0.95)]
    assert values == sorted(values, reverse=True)


def test_empty_curve():
    with pytest.raises(EmptyCurveError):
        robustness_epsilon(curve([], []))


def test_capital_lambda_of_constant_ratio():
    phi = phi_grid(0.01)
    assert capital_lambda(phi, np.full(phi.size, 1.2), 0.5) == pytest.approx(0.2)


def test_capital_lambda_needs_resolution():
    phi = phi_grid(0.01)
    with pytest.raises(InsufficientResolutionError):
        capital_lambda(phi, np.ones(phi.size), 0.005)


def test_lambda_curves_are_one_for_proportional_levels():
    phi = phi_grid(0.01)
    base = 0.4 / (1.0 + (np.abs(phi - math.pi) / 0.7) ** 4)
    report = lambda_curves(curve(phi, base, "W"), curve(phi, 2 * base, "F"), curve(phi, 2.2 * base, "S"))
    np.testing.assert_allclose(report.lambda1, 1.0, atol=1e-12)
    np.testing.assert_allclose(report.lambda2, 1.0, atol=1e-12)
    assert capital_lambda(report.phi, report.lambda1, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_lambda_masks_zero_denominators():
    phi = phi_grid(0.5)
    w = np.full(phi.size, 0.3)
    w[0] = 0.0
    report = lambda_curves(curve(phi, w, "W"), curve(phi, np.full(phi.size, 0.6), "F"), curve(phi, np.full(phi.size, 0.7), "S"))
    assert np.isnan(report.lambda1[0])
    assert not np.isnan(report.lambda2[0])


def test_lambda_degenerate_normalization():
    phi = phi_grid(0.5)
    zeros = np.zeros(phi.size)
    ones = np.full(phi.size, 0.5)
    with pytest.raises(DegenerateNormalizationError):
        lambda_curves(curve(phi, zeros, "W"), curve(phi, ones, "F"), curve(phi, ones, "S"))


def test_lambda_needs_shared_grid():
    a = phi_grid(0.5)
    b = phi_grid(0.25)
    with pytest.raises(InvariantError):
        lambda_curves(curve(a, np.full(a.size, 0.3)), curve(b, np.full(b.size, 0.3), "F"), curve(a, np.full(a.size, 0.3), "S"))


def test_sweep_at_grover_point(linear_law):
    sweep = sweep_phi(6, linear_law, grid_step=0.5)
    i_pi = int(np.argmin(np.abs(sweep.phi - math.pi)))
    assert sweep.zeta[i_pi] == pytest.approx(math.pi)
    assert sweep.p_w[i_pi] == pytest.approx(0.411765, abs=1e-4)
    assert np.all(sweep.p_w <= sweep.p_f) and np.all(sweep.p_f <= sweep.p_s)
    np.testing.assert_allclose(sweep.p_w, sweep.p_w[::-1], atol=1e-10)


def test_sweep_is_independent_of_jobs(linear_law):
    serial = sweep_phi(4, linear_law, grid_step=0.4, jobs=1)
    parallel = sweep_phi(4, linear_law, grid_step=0.4, jobs=2)
    np.testing.assert_array_equal(serial.p_w, parallel.p_w)
    np.testing.assert_array_equal(serial.p_s, parallel.p_s)


def test_sweep_nl_ml_without_alpha_for_size():
    law = DependenceLaw.from_name("nl-ml", {4: -0.1})
    with pytest.raises(ConfigurationError):
        sweep_phi(5, law, grid_step=0.5)


def test_heatmap_contains_grover_point():
    heatmap = sweep_heatmap(4, [math.pi / 2, math.pi], [0.0, math.pi])
    assert heatmap.p_w.shape == (2, 2)
    assert heatmap.p_w[1, 1] == pytest.approx(
        sweep_phi(4, DependenceLaw.from_name("const"), phis=[math.pi]).p_w[0]
    )


@pytest.mark.slow
@pytest.mark.parametrize("m", [6, 8, 10])
def test_robustness_ordering_of_laws(m):
    eps = {}
    for name in ("const", "linear", "nl-fixed"):
        sweep = sweep_phi(m, DependenceLaw.from_name(name), grid_step=0.005, jobs=2)
        eps[name] = robustness_epsilon(sweep.curve("W"), 0.9).epsilon
    assert eps["const"] < eps["linear"] < eps["nl-fixed"]


@pytest.mark.slow
def test_lambda_report_on_a_sweep(linear_law):
    sweep = sweep_phi(6, linear_law, grid_step=0.01, jobs=2)
    epsilon = robustness_epsilon(sweep.curve("W")).epsilon
    report = lambda_report(sweep, epsilon)
    assert report.interval == (math.pi, math.pi + epsilon)
    assert math.isfinite(report.capital_lambda1)
    assert math.isfinite(report.capital_lambda2)


@pytest.mark.slow
@pytest.mark.parametrize(
    "m, name, which",
    [(6, "linear", 1), (6, "nl-fixed", 2), (10, "linear", 1)],
)
def test_lambda_averages_match_published_values(m, name, which):
    sweep = sweep_phi(m, DependenceLaw.from_name(name), grid_step=0.005, jobs=2)
    report = lambda_report(sweep, robustness_epsilon(sweep.curve("W")).epsilon)
    measured = report.capital_lambda1 if which == 1 else report.capital_lambda2
    expected = published_lambda(m, name)[which - 1]
    assert measured == pytest.approx(expected, abs=load_reference()["lambda_averages"]["tolerance"])


def test_phase_only_coin_leaves_uniform_distribution():
    heatmap = sweep_heatmap(4, [0.0], [0.0, 1.0, 2.5])
    np.testing.assert_allclose(heatmap.p_w, 1 / 16, atol=1e-10)
