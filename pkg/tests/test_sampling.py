import numpy as np
import pytest

from megpr.domain.exceptions import DegenerateInputError, SamplerStarvationError
from megpr.domain.gram import HyperParameters
from megpr.domain.sampling import RejectionSampler, sample_constraints_rejection, sample_constraints_uniform
from megpr.domain.systems import build_linear_chain
from megpr.testing import DatasetFactory


def test_uniform_draw_is_reproducible():
    first = sample_constraints_uniform(10.0, 5, np.random.default_rng(42))
    second = sample_constraints_uniform(10.0, 5, np.random.default_rng(42))
    np.testing.assert_array_equal(first.times, second.times)
    assert first.provenance == "uniform"
    assert np.all((first.times >= 0) & (first.times <= 10.0))


def test_uniform_draw_mean(rng):
    draws = sample_constraints_uniform(10.0, 100_000, rng).times
    standard_error = 10.0 / np.sqrt(12.0 * draws.size)
    assert abs(draws.mean() - 5.0) < 3 * standard_error


def test_zero_constraints_is_an_error(rng):
    with pytest.raises(DegenerateInputError):
        sample_constraints_uniform(10.0, 0, rng)


def test_flat_potential_at_floor_accepts_everything(rng):
    sampler = RejectionSampler(lambda t: np.full(np.shape(t), 1e-4), eta=1.0, sigma_v=1e-2, t_max=5.0)
    constraints = sampler.sample(200, rng)
    assert len(constraints) == 200
    assert sampler.acceptance_rate == pytest.approx(1.0)
    assert constraints.provenance == "rejection"


def test_potential_at_eta_accepts_at_exp_minus_four(rng):
    sampler = RejectionSampler(lambda t: np.full(np.shape(t), 2.0), eta=2.0, sigma_v=0.1, t_max=1.0)
    sampler.sample(1830, rng)
    expected = np.exp(-4.0)
    standard_error = np.sqrt(expected * (1 - expected) / sampler.proposals)
    assert sampler.proposals > 50_000
    assert abs(sampler.acceptance_rate - expected) < 3 * standard_error


def test_sampler_is_deterministic_for_a_seed():
    def potential(t):
        return 0.5 + 0.5 * np.sin(t) ** 2

    first = RejectionSampler(potential, 1.0, 0.1, 6.0).sample(50, np.random.default_rng(3))
    second = RejectionSampler(potential, 1.0, 0.1, 6.0).sample(50, np.random.default_rng(3))
    np.testing.assert_array_equal(first.times, second.times)


def test_degenerate_potential_starves(rng):
    sampler = RejectionSampler(lambda t: np.full(np.shape(t), 1.0), eta=0.01 + 1e-6, sigma_v=0.1, t_max=1.0)
    with pytest.raises(SamplerStarvationError) as excinfo:
        sampler.sample(10, rng)
    assert excinfo.value.proposals >= 1_000_000


def test_rejection_from_model_favours_gaps_in_the_data(rng):
    model = build_linear_chain()
    dataset = DatasetFactory(seed=1).chain(n=15, sigma=0.01)
    hyper = HyperParameters.create(0.4, 1.0, [0.01], 1e-2)
    constraints = sample_constraints_rejection(model, dataset, [1.0, 1.0], hyper, 30, rng)
    assert len(constraints) == 30
    assert np.all((constraints.times >= 0) & (constraints.times <= dataset.t_max))
