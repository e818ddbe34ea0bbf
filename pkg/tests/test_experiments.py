import numpy as np
import pytest

from megpr.config import EstimatorConfig, ExperimentSpec
from megpr.diagnostics import experiments
from megpr.diagnostics.experiments import (
    TrialReport,
    TrialRow,
    generate_dataset,
    preset_specs,
    run_experiment,
)
from megpr.domain.exceptions import ExperimentFailedError, IllConditionedGramError
from megpr.testing import chain_intermediate


def _quick_spec(**overrides):
    values = {
        "system": "linear-chain",
        "n": 20,
        "noise_sigma": 0.01,
        "trials": 2,
        "seed": 5,
        "estimator": EstimatorConfig(iterations=8, n_constraints=10),
    }
    values.update(overrides)
    return ExperimentSpec(**values)


def _report(estimates, theta_true=(1.0, 1.0)):
    report = TrialReport(_quick_spec(), ("theta1", "theta2"), theta_true, 1e-4)
    report.rows = [TrialRow(i, tuple(e), 0.0, 10, "max-iters") for i, e in enumerate(estimates)]
    return report


def test_noiseless_chain_observations_follow_closed_form():
    dataset = generate_dataset(ExperimentSpec("linear-chain", n=50, noise_sigma=0.0, trials=1))
    np.testing.assert_allclose(dataset.observations[:, 1], chain_intermediate(dataset.times), atol=1e-6)
    assert np.all(np.isnan(dataset.observations[:, [0, 2]]))
    assert dataset.times[0] == 0.0 and dataset.times[-1] == pytest.approx(10.0)


def test_noise_level_matches_sigma():
    spec = ExperimentSpec("linear-chain", n=10_000, noise_sigma=0.1, trials=1, seed=8)
    dataset = generate_dataset(spec)
    residuals = dataset.observations[:, 1] - chain_intermediate(dataset.times)
    assert abs(residuals.std() - 0.1) < 3 * 0.1 / np.sqrt(2 * residuals.size)


def test_fitzhugh_nagumo_data_observes_both_components():
    dataset = generate_dataset(ExperimentSpec("fn", n=25, noise_sigma=0.1, trials=1, theta_true=(5.0, 1.0, 0.5)))
    assert dataset.present.all()
    assert dataset.t_max == pytest.approx(20.0)


def test_statistics_of_a_report():
    report = _report([(0.9, 1.1), (1.1, 0.9), (1.0, 1.0)])
    np.testing.assert_allclose(report.mean, [1.0, 1.0])
    np.testing.assert_allclose(report.sd, [0.1, 0.1])
    low, high = report.interval
    np.testing.assert_allclose(low, [0.8, 0.8])
    assert report.coverage.all()
    assert not _report([(2.0, 1.0), (2.1, 1.0)]).coverage[0]


def test_single_trial_reports_zero_sd():
    report = _report([(0.95, 1.05)])
    assert report.single_trial
    np.testing.assert_array_equal(report.sd, [0.0, 0.0])


def test_run_experiment_produces_one_row_per_trial():
    (report,) = run_experiment(_quick_spec())
    assert len(report.rows) == 2
    assert [row.trial for row in report.rows] == [0, 1]
    assert report.estimates.shape == (2, 2)
    assert report.failures == 0


def test_trials_are_reproducible():
    first = run_experiment(_quick_spec(trials=1))[0].estimates
    second = run_experiment(_quick_spec(trials=1))[0].estimates
    np.testing.assert_array_equal(first, second)


def test_sigma_v_sweep_gives_one_report_per_value():
    reports = run_experiment(_quick_spec(trials=1, sigma_v_sweep=(1e-4, 1e-2)))
    assert [report.sigma_v for report in reports] == [1e-4, 1e-2]


def test_too_many_failures_abort(monkeypatch):
    def failing_fit(*args, **kwargs):
        raise IllConditionedGramError("forced")

    monkeypatch.setattr(experiments, "fit_dataset", failing_fit)
    with pytest.raises(ExperimentFailedError) as excinfo:
        run_experiment(_quick_spec(trials=3))
    assert excinfo.value.failures == 3


def test_mse_run_attaches_scores_and_curves():
    spec = ExperimentSpec(
        "van-der-pol",
        n=30,
        noise_sigma=0.1,
        trials=1,
        mse=True,
        estimator=EstimatorConfig(iterations=4, n_constraints=15, sigma_v=1e-2),
    )
    (report,) = run_experiment(spec)
    assert len(report.mse) == 9
    assert {row.method for row in report.mse} == {"predictor", "ode", "gpr"}
    assert [curves.order for curves in report.curves] == [0, 1, 2]
    assert report.curves[0].observations is not None
    assert report.mse_value("u", "predictor") >= 0


def test_presets():
    chain = preset_specs("chain-grid", trials=3)
    assert [(s.n, s.noise_sigma) for s in chain] == [
        (50, 0.01), (50, 0.05), (50, 0.1), (100, 0.01), (100, 0.05), (100, 0.1)
    ]
    assert all(s.trials == 3 for s in chain)
    (mse_cell,) = preset_specs("vdp-mse")
    assert mse_cell.mse and mse_cell.trials == 1
    assert [s.noise_sigma for s in preset_specs("fn-noise")] == [0.1, 0.2, 0.3]
    with pytest.raises(KeyError):
        preset_specs("lorenz-grid")


@pytest.mark.slow
def test_linear_chain_cell_reproduces_published_estimates():
    spec = ExperimentSpec("linear-chain", n=100, noise_sigma=0.05, trials=100, seed=0, workers=4)
    (report,) = run_experiment(spec)
    np.testing.assert_allclose(report.mean, [0.890, 0.943], atol=0.1)
    for sd, target in zip(report.sd, (0.040, 0.050)):
        assert target / 2 <= sd <= target * 2


@pytest.mark.slow
def test_van_der_pol_cell_reproduces_published_mean():
    (report,) = run_experiment(ExperimentSpec("van-der-pol", n=100, noise_sigma=0.1, trials=100, workers=4))
    assert 0.387 <= report.mean[0] <= 0.507


@pytest.mark.slow
def test_fitzhugh_nagumo_cell_reproduces_published_mean():
    spec = ExperimentSpec("fitzhugh-nagumo", n=250, noise_sigma=0.1, trials=20, theta_true=(5.0, 1.0, 0.5), workers=4)
    (report,) = run_experiment(spec)
    np.testing.assert_allclose(report.mean, [4.9987, 0.9997, 0.4781], atol=0.15)
