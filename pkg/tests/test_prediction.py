import numpy as np
import pytest

from megpr.domain.exceptions import ConfigurationError, DomainError, UnsupportedOrderError
from megpr.domain.gram import ConstraintSet, HyperParameters
from megpr.domain.prediction import PosteriorCurve, gpr_baseline, predict, predict_constraint
from megpr.domain.systems import Dataset, build_linear_chain
from megpr.testing import DatasetFactory, chain_intermediate

THETA = np.array([1.0, 1.0])


@pytest.fixture()
def noiseless_chain():
    return DatasetFactory(seed=0).chain(n=10, sigma=0.0)


def test_prediction_interpolates_noiseless_data(noiseless_chain):
    hyper = HyperParameters.create(0.4, 1.0, [1e-5])
    curve = predict(build_linear_chain(), noiseless_chain, None, THETA, hyper, 1, 0, noiseless_chain.times)
    np.testing.assert_allclose(curve.mean, noiseless_chain.observations[:, 1], atol=1e-6)
    assert curve.label == "x2^(0)"
    assert np.all(curve.variance >= 0)


def test_derivative_curve_matches_differentiated_mean(noiseless_chain):
    model = build_linear_chain()
    hyper = HyperParameters.create(0.4, 1.2, [1e-3], 1e-3)
    constraints = ConstraintSet(np.linspace(0.2, 9.8, 15), "fixed", 10.0)
    grid = np.linspace(1.0, 9.0, 401)
    level = predict(model, noiseless_chain, constraints, THETA, hyper, 1, 0, grid)
    slope = predict(model, noiseless_chain, constraints, THETA, hyper, 1, 1, grid)
    numeric = np.gradient(level.mean, grid)
    assert np.max(np.abs(numeric[1:-1] - slope.mean[1:-1])) < 1e-3


def test_constraints_pull_the_unobserved_component_towards_truth():
    dataset = DatasetFactory(seed=5).chain(n=30, sigma=0.01)
    model = build_linear_chain()
    hyper = HyperParameters.create(0.4, 1.2, [0.01], 1e-3)
    constraints = ConstraintSet(np.linspace(0.1, 9.9, 40), "fixed", 10.0)
    grid = np.linspace(0.5, 8.0, 50)
    curve = predict(model, dataset, constraints, THETA, hyper, 0, 0, grid)
    # x1 = (x2' + θ2 x2) / θ1 = e^{-t} at unit rates.
    np.testing.assert_allclose(curve.mean, np.exp(-grid), atol=0.05)
    np.testing.assert_allclose(
        predict(model, dataset, constraints, THETA, hyper, 1, 0, grid).mean, chain_intermediate(grid), atol=0.02
    )


def test_constraint_residual_curve(noiseless_chain):
    hyper = HyperParameters.create(0.4, 1.2, [1e-3], 1e-3)
    constraints = ConstraintSet(np.linspace(0.5, 9.5, 12), "fixed", 10.0)
    curve = predict_constraint(build_linear_chain(), noiseless_chain, constraints, THETA, hyper, [1.0, 4.0])
    assert curve.label == "v"
    assert np.all(np.abs(curve.mean) < 0.1)


def test_prediction_rejects_unpredictable_component_and_high_orders(noiseless_chain):
    model = build_linear_chain()
    hyper = HyperParameters.create(0.4, 1.0, [0.01])
    with pytest.raises(ConfigurationError):
        predict(model, noiseless_chain, None, THETA, hyper, 2, 0, [1.0])
    with pytest.raises(UnsupportedOrderError):
        predict(model, noiseless_chain, None, THETA, hyper, 0, 4, [1.0])


def test_baseline_of_constant_data():
    times = np.linspace(0, 5, 20)
    level = gpr_baseline(times, np.full(20, -1.5), times, 0)
    slope = gpr_baseline(times, np.full(20, -1.5), times, 1)
    np.testing.assert_allclose(level.mean, -1.5, atol=1e-6)
    np.testing.assert_allclose(slope.mean, 0.0, atol=1e-6)
    assert level.label.startswith("gpr")


def test_curve_clamps_roundoff_and_rejects_negative_variance():
    curve = PosteriorCurve(np.array([0.0, 1.0]), np.zeros(2), np.array([-1e-14, 4.0]), 0, 0)
    np.testing.assert_array_equal(curve.variance, [0.0, 4.0])
    low, high = curve.band()
    np.testing.assert_allclose(high, [0.0, 4.0])
    np.testing.assert_allclose(low, [0.0, -4.0])
    with pytest.raises(DomainError):
        PosteriorCurve(np.array([0.0]), np.zeros(1), np.array([-0.5]), 0, 0)


def test_derived_component_is_the_operator_image_of_the_latent_mean():
    dataset = DatasetFactory(seed=6).chain(n=25, sigma=0.02)
    model = build_linear_chain()
    theta = np.array([1.3, 0.7])
    hyper = HyperParameters.create(0.4, 1.1, [0.02], 1e-3)
    constraints = ConstraintSet(np.linspace(0.3, 9.7, 20), "fixed", 10.0)
    grid = np.linspace(0.0, 10.0, 120)
    x1 = predict(model, dataset, constraints, theta, hyper, 0, 0, grid)
    u = predict(model, dataset, constraints, theta, hyper, 1, 0, grid)
    du = predict(model, dataset, constraints, theta, hyper, 1, 1, grid)
    np.testing.assert_allclose(x1.mean, (du.mean + theta[1] * u.mean) / theta[0], rtol=0, atol=1e-8)


def test_constraint_residual_stays_within_its_noise_level():
    dataset = DatasetFactory(seed=0).chain(n=50, sigma=0.0)
    sigma_v = 1e-3
    hyper = HyperParameters.create(0.4, 1.2, [1e-3], sigma_v)
    constraints = ConstraintSet(np.linspace(0.1, 9.9, 50), "fixed", 10.0)
    grid = np.linspace(0.0, 10.0, 201)
    curve = predict_constraint(build_linear_chain(), dataset, constraints, THETA, hyper, grid)
    assert np.max(np.abs(curve.mean)) <= 10 * sigma_v


@pytest.mark.parametrize("component, order", [(0, 0), (1, 0), (1, 1), (1, 2)])
def test_constraints_never_widen_the_posterior(component, order):
    dataset = DatasetFactory(seed=7).chain(n=15, sigma=0.05)
    model = build_linear_chain()
    hyper = HyperParameters.create(0.5, 1.0, [0.05], 1e-2)
    constraints = ConstraintSet(np.random.default_rng(7).uniform(0.0, 10.0, 25), "uniform", 10.0)
    grid = np.linspace(0.0, 10.0, 80)
    constrained = predict(model, dataset, constraints, THETA, hyper, component, order, grid)
    unconstrained = predict(model, dataset, None, THETA, hyper, component, order, grid)
    assert np.all(constrained.variance <= unconstrained.variance + 1e-10)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_baseline_equals_unconstrained_identity_prediction(order):
    times = np.array([0.0, 1.5, 3.0, 4.5, 6.0])
    values = np.array([0.1, 0.4, 0.2, -0.1, 0.05])
    observations = np.full((5, 3), np.nan)
    observations[:, 1] = values
    dataset = Dataset(times, observations, 6.0)
    hyper = HyperParameters.create(0.6, 1.3, [0.05])
    grid = np.linspace(0.0, 6.0, 31)
    curve = predict(build_linear_chain(), dataset, None, THETA, hyper, 1, order, grid)
    baseline = gpr_baseline(times, values, grid, order, kernel=hyper.kernel, noise=0.05, center=False, component=1)
    np.testing.assert_allclose(baseline.mean, curve.mean, atol=1e-10)
    np.testing.assert_allclose(baseline.variance, curve.variance, atol=1e-10)


def test_unsorted_query_times_are_rejected(noiseless_chain):
    with pytest.raises(ConfigurationError, match="sorted"):
        PosteriorCurve(np.array([1.0, 0.0]), np.zeros(2), np.ones(2), 0, 0)
    hyper = HyperParameters.create(0.4, 1.0, [0.01])
    with pytest.raises(ConfigurationError):
        predict(build_linear_chain(), noiseless_chain, None, THETA, hyper, 1, 0, [2.0, 1.0, 3.0])
