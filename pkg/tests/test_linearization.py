import numpy as np
import pytest

from megpr.domain.exceptions import ConfigurationError, DegenerateInputError
from megpr.domain.fields import FitzHughNagumoField, LinearField, VanDerPolField
from megpr.domain.linearization import (
    FixedPointTable,
    choose_fixed_points,
    fixed_points_from_gpr,
    fixed_points_from_observations,
    linearize,
    mc_marginalize_fixed_points,
)
from megpr.domain.smoothing import fit_smoother, heuristic_hyperparameters
from megpr.domain.systems import Dataset


def test_lookup_prefers_left_anchor_on_ties():
    table = FixedPointTable(np.array([0.0, 1.0, 2.0]), np.zeros((3, 1)))
    np.testing.assert_array_equal(table.lookup([0.5, 0.51, 1.0, 1.5, -3.0, 9.0]), [0, 1, 1, 1, 0, 2])


def test_table_rejects_empty_and_unsorted_inputs():
    with pytest.raises(ConfigurationError):
        FixedPointTable(np.array([]), np.zeros((0, 2)))
    with pytest.raises(ConfigurationError):
        FixedPointTable(np.array([1.0, 0.0]), np.zeros((2, 1)))


def test_linear_field_linearization_is_exact():
    matrix = np.array([[0.0, 1.0], [-4.0, -0.5]])
    table = FixedPointTable(np.array([0.0, 1.0]), np.array([[1.0, 2.0], [-3.0, 0.5]]))
    lin = linearize(LinearField(matrix), table)
    for i in range(2):
        np.testing.assert_allclose(lin.offset(i)([0.2, 0.9], [])[0], 0.0, atol=1e-12)
        for j in range(2):
            np.testing.assert_allclose(lin.jacobian(i, j)([0.2, 0.9], [])[0], matrix[i, j])


@pytest.mark.parametrize(
    "field, theta", [(VanDerPolField(), [0.5]), (FitzHughNagumoField(), [0.4, 0.3, 2.0])], ids=["vdp", "fn"]
)
def test_linearization_is_exact_at_the_anchors(field, theta):
    rng = np.random.default_rng(8)
    times = np.arange(100.0)
    states = rng.uniform(-3.0, 3.0, size=(100, 2))
    lin = linearize(field, FixedPointTable(times, states))
    jacobian = np.stack(
        [np.stack([lin.jacobian(i, j)(times, theta)[0] for j in range(2)], axis=-1) for i in range(2)], axis=1
    )
    offset = np.column_stack([lin.offset(i)(times, theta)[0] for i in range(2)])
    linear_part = np.einsum("kij,kj->ki", jacobian, states)
    tolerance = 1e-12 * max(1.0, float(np.abs(linear_part).max()))
    np.testing.assert_allclose(linear_part + offset, field.rhs(states, np.asarray(theta)), rtol=0, atol=tolerance)


def test_linearize_checks_dimensions():
    table = FixedPointTable(np.array([0.0]), np.zeros((1, 3)))
    with pytest.raises(ConfigurationError):
        linearize(LinearField(np.eye(2)), table)


def test_observation_anchors_copy_the_data():
    dataset = Dataset(np.array([0.0, 1.0, 2.0]), np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), 2.0)
    table = fixed_points_from_observations(dataset)
    assert len(table) == 3
    np.testing.assert_array_equal(table.states, dataset.observations)
    assert table.source == "observations"


def test_observation_anchors_need_every_required_component():
    dataset = Dataset(np.array([0.0, 1.0, 2.0]), np.array([[1.0, np.nan], [3.0, np.nan], [5.0, np.nan]]), 2.0)
    with pytest.raises(ConfigurationError, match="fixed_points_from_gpr"):
        fixed_points_from_observations(dataset)


def test_smoother_interpolates_noiseless_data():
    times = np.linspace(0, 5, 30)
    values = np.sin(times)
    fit = fit_smoother(times, values)
    mean, _ = fit.posterior(times)
    np.testing.assert_allclose(mean, values, atol=1e-3)
    derivative, _ = fit.posterior(times[5:25], order=1)
    np.testing.assert_allclose(derivative, np.cos(times[5:25]), atol=5e-2)


def test_smoother_of_constant_data_is_flat():
    times = np.linspace(0, 4, 20)
    fit = fit_smoother(times, np.full(20, 2.5))
    mean, _ = fit.posterior(times)
    slope, _ = fit.posterior(times, order=1)
    np.testing.assert_allclose(mean, 2.5, atol=1e-6)
    np.testing.assert_allclose(slope, 0.0, atol=1e-6)


def test_smoother_needs_three_points():
    with pytest.raises(DegenerateInputError):
        fit_smoother([0.0, 1.0], [1.0, 2.0])


def test_heuristic_hyperparameters():
    kernel, noise = heuristic_hyperparameters(np.array([0.0, 0.5, 1.0, 1.5]), np.array([1.0, -1.0, 1.0, -1.0]))
    assert kernel.length_scale == pytest.approx(1.0)
    assert kernel.amplitude == pytest.approx(1.0)
    assert noise == pytest.approx(0.1)


def test_gpr_anchors_fill_derived_component():
    times = np.linspace(0, 6, 60)
    observations = np.column_stack([2.0 * np.cos(times), np.full(times.size, np.nan)])
    dataset = Dataset(times, observations, 6.0)
    table = fixed_points_from_gpr(dataset, derived={1: (0, 1)})
    assert table.source == "gpr"
    assert table.std is not None
    np.testing.assert_allclose(table.states[0], [2.0, 0.0], atol=0.1)
    np.testing.assert_allclose(table.states[20:40, 1], -2.0 * np.sin(times[20:40]), atol=0.05)


def test_gpr_anchors_reject_underivable_component():
    times = np.linspace(0, 1, 5)
    dataset = Dataset(times, np.column_stack([times, np.full(5, np.nan)]), 1.0)
    with pytest.raises(ConfigurationError):
        fixed_points_from_gpr(dataset)


def test_auto_mode_uses_raw_observations_for_small_noise():
    times = np.linspace(0, 5, 25)
    dataset = Dataset(times, np.column_stack([np.sin(times), np.cos(times)]), 5.0)
    table = choose_fixed_points(dataset, noise_sigma=0.001)
    assert table.source == "observations"
    assert choose_fixed_points(dataset, noise_sigma=0.5).source == "gpr"
    with pytest.raises(ConfigurationError):
        choose_fixed_points(dataset, mode="psychic")


def test_mc_marginalization_with_zero_spread_matches_point_estimate(rng):
    table = FixedPointTable(np.array([0.0, 1.0]), np.array([[1.0], [2.0]]), std=np.zeros((2, 1)))

    def inner(sampled):
        return float(sampled.states.sum()), sampled.states[:, 0] * 2.0

    value, grad = mc_marginalize_fixed_points(table, 1, inner, rng)
    assert value == pytest.approx(3.0)
    np.testing.assert_allclose(grad, [2.0, 4.0])


def test_mc_marginalization_is_reproducible():
    table = FixedPointTable(np.array([0.0, 1.0]), np.array([[1.0], [2.0]]), std=np.full((2, 1), 0.3))

    def inner(sampled):
        return (float(sampled.states.sum()),)

    first = mc_marginalize_fixed_points(table, 2, inner, np.random.default_rng(5))
    second = mc_marginalize_fixed_points(table, 2, inner, np.random.default_rng(5))
    assert first == second


def test_mc_marginalization_needs_samples(rng):
    table = FixedPointTable(np.array([0.0]), np.array([[1.0]]))
    with pytest.raises(DegenerateInputError):
        mc_marginalize_fixed_points(table, 0, lambda sampled: (0.0,), rng)
