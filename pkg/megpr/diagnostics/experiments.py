"""Synthetic data generation and repeated-trial parameter estimation."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..config import ExperimentSpec
from ..domain.exceptions import ExperimentFailedError, MegprError
from ..domain.integrators import Trajectory, rk4_reference
from ..domain.optimizer import EstimationResult, semi_adam_fit
from ..domain.prediction import PosteriorCurve, gpr_baseline, predict
from ..domain.systems import Dataset
from ..registry import SystemDefinition, SystemRegistry, default_registry

logger = logging.getLogger(__name__)

FAILURE_LIMIT = 0.2
MSE_GRID_SIZE = 500
MSE_QUANTITIES = ("u", "du", "d2u")


@dataclass(slots=True)
class TrialRow:
    trial: int
    theta_hat: tuple[float, ...]
    objective: float
    iterations: int
    reason: str


@dataclass(slots=True)
class MseRow:
    quantity: str
    method: str
    value: float


@dataclass(slots=True)
class CurveSet:
    """Curves of one derivative order for the SVG report."""

    order: int
    truth: np.ndarray
    predictor: PosteriorCurve
    baseline: PosteriorCurve
    observation_times: np.ndarray | None = None
    observations: np.ndarray | None = None


@dataclass(slots=True)
class TrialReport:
    spec: ExperimentSpec
    param_names: tuple[str, ...]
    theta_true: tuple[float, ...]
    sigma_v: float
    rows: list[TrialRow] = field(default_factory=list)
    failures: int = 0
    mse: list[MseRow] = field(default_factory=list)
    curves: list[CurveSet] = field(default_factory=list)

    @property
    def estimates(self) -> np.ndarray:
        return np.array([row.theta_hat for row in self.rows], dtype=float).reshape(len(self.rows), -1)

    @property
    def single_trial(self) -> bool:
        return len(self.rows) == 1

    @property
    def mean(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    @property
    def sd(self) -> np.ndarray:
        if len(self.rows) < 2:
            return np.zeros(len(self.param_names))
        return self.estimates.std(axis=0, ddof=1)

    @property
    def interval(self) -> tuple[np.ndarray, np.ndarray]:
        """mean ± 2 SD per parameter."""
        return self.mean - 2.0 * self.sd, self.mean + 2.0 * self.sd

    @property
    def coverage(self) -> np.ndarray:
        low, high = self.interval
        truth = np.asarray(self.theta_true)
        return (low <= truth) & (truth <= high)

    def mse_value(self, quantity: str, method: str) -> float | None:
        for row in self.mse:
            if row.quantity == quantity and row.method == method:
                return row.value
        return None


@dataclass(frozen=True, slots=True)
class ResolvedSetup:
    definition: SystemDefinition
    theta_true: np.ndarray
    initial_state: np.ndarray
    t_max: float


def resolve(spec: ExperimentSpec, registry: SystemRegistry | None = None) -> ResolvedSetup:
    definition = (registry or default_registry()).get(spec.system)
    return ResolvedSetup(
        definition,
        np.array(spec.theta_true or definition.theta_true, dtype=float),
        np.array(spec.initial_state or definition.initial_state, dtype=float),
        float(spec.t_max or definition.t_max),
    )


def simulate_truth(setup: ResolvedSetup, times) -> Trajectory:
    return rk4_reference(
        setup.definition.field, setup.theta_true, setup.initial_state, times, step=setup.t_max / 10_000
    )


def observe(
    truth: Trajectory, observed: Sequence[bool], noise_sigma: float, t_max: float, rng: np.random.Generator
) -> Dataset:
    noise = rng.normal(0.0, 1.0, size=truth.states.shape) * noise_sigma
    observations = np.where(np.array(observed)[None, :], truth.states + noise, np.nan)
    return Dataset(truth.times.copy(), observations, t_max)


def generate_dataset(
    spec: ExperimentSpec,
    rng: np.random.Generator | None = None,
    *,
    registry: SystemRegistry | None = None,
) -> Dataset:
    """RK4 trajectory at n uniform times with iid Gaussian noise on observed components."""
    setup = resolve(spec, registry)
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    truth = simulate_truth(setup, np.linspace(0.0, setup.t_max, spec.n))
    return observe(truth, setup.definition.observed, spec.noise_sigma, setup.t_max, rng)


def fit_dataset(
    spec: ExperimentSpec,
    setup: ResolvedSetup,
    dataset: Dataset,
    rng: np.random.Generator,
    sigma_v: float | None = None,
):
    estimator = spec.estimator if sigma_v is None else replace(spec.estimator, sigma_v=sigma_v)
    model = setup.definition.build_model(
        dataset, mode=estimator.fixed_points, noise_sigma=spec.noise_sigma
    )
    return model, semi_adam_fit(model, dataset, estimator, rng=rng)


def _child_seeds(seed: np.random.SeedSequence) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Data and fit seeds of a trial; the parent is left unspawned."""
    return tuple(np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, index)) for index in range(2))


def _sigma_values(spec: ExperimentSpec) -> tuple[float, ...]:
    return spec.sigma_v_sweep or (spec.estimator.sigma_v,)


def _run_trial(spec: ExperimentSpec, trial: int, seed: np.random.SeedSequence, registry=None):
    """Returns ``(trial, [(sigma_v, row or None)])`` for every σ_v of the sweep."""
    setup = resolve(spec, registry)
    data_seed, fit_seed = _child_seeds(seed)
    truth = simulate_truth(setup, np.linspace(0.0, setup.t_max, spec.n))
    dataset = observe(truth, setup.definition.observed, spec.noise_sigma, setup.t_max, np.random.default_rng(data_seed))
    outcomes = []
    for sigma_v in _sigma_values(spec):
        try:
            _, result = fit_dataset(spec, setup, dataset, np.random.default_rng(fit_seed), sigma_v)
        except MegprError as exc:
            logger.warning("Trial %d (sigma_v=%g) failed: %s", trial, sigma_v, exc)
            outcomes.append((sigma_v, None))
            continue
        outcomes.append((sigma_v, _row(trial, result)))
    return trial, outcomes


def _row(trial: int, result: EstimationResult) -> TrialRow:
    return TrialRow(
        trial=trial,
        theta_hat=tuple(float(v) for v in result.theta_hat),
        objective=float(result.diagnostics.best_smoothed),
        iterations=result.diagnostics.iterations,
        reason=result.diagnostics.reason,
    )


def run_experiment(spec: ExperimentSpec, *, registry: SystemRegistry | None = None) -> list[TrialReport]:
    """Run all trials; one report per σ_v value of the sweep.

    Worker processes rebuild the default registry, so a custom registry
    runs its trials in-process.
    """
    spec.validate()
    setup = resolve(spec, registry)
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.trials)
    logger.info("Running %d trials of %s (n=%d, sigma=%g)", spec.trials, spec.system, spec.n, spec.noise_sigma)
    if spec.workers > 1 and registry is None:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_trial, [spec] * spec.trials, range(spec.trials), seeds))
    else:
        results = [_run_trial(spec, trial, seed, registry) for trial, seed in enumerate(seeds)]
    results.sort(key=lambda item: item[0])

    reports = []
    for index, sigma_v in enumerate(_sigma_values(spec)):
        report = TrialReport(spec, setup.definition.param_names, tuple(setup.theta_true.tolist()), sigma_v)
        for _, outcomes in results:
            row = outcomes[index][1]
            if row is None:
                report.failures += 1
            else:
                report.rows.append(row)
        if not report.rows or report.failures > FAILURE_LIMIT * spec.trials:
            raise ExperimentFailedError(report.failures, spec.trials)
        if spec.mse:
            _attach_mse(report, spec, setup, seeds[0], sigma_v)
        reports.append(report)
    return reports


def _attach_mse(report: TrialReport, spec: ExperimentSpec, setup: ResolvedSetup, seed, sigma_v: float) -> None:
    """Fit once and score predictor, GPR and re-integration against the truth."""
    data_seed, fit_seed = _child_seeds(seed)
    truth_obs = simulate_truth(setup, np.linspace(0.0, setup.t_max, spec.n))
    dataset = observe(
        truth_obs, setup.definition.observed, spec.noise_sigma, setup.t_max, np.random.default_rng(data_seed)
    )
    model, result = fit_dataset(spec, setup, dataset, np.random.default_rng(fit_seed), sigma_v)
    grid = np.linspace(0.0, setup.t_max, MSE_GRID_SIZE)
    truth = simulate_truth(setup, grid)
    refit = rk4_reference(setup.definition.field, result.theta_hat, setup.initial_state, grid, step=setup.t_max / 10_000)
    latent = model.latent_index
    obs_times, obs_values = dataset.component(latent)
    for order, quantity in enumerate(MSE_QUANTITIES):
        reference = truth.component(latent, order)
        curve = predict(model, dataset, result.constraints, result.theta_hat, result.hyper_hat, latent, order, grid)
        baseline = gpr_baseline(obs_times, obs_values, grid, order, component=latent)
        report.mse.extend(
            [
                MseRow(quantity, "predictor", float(np.mean((curve.mean - reference) ** 2))),
                MseRow(quantity, "ode", float(np.mean((refit.component(latent, order) - reference) ** 2))),
                MseRow(quantity, "gpr", float(np.mean((baseline.mean - reference) ** 2))),
            ]
        )
        report.curves.append(
            CurveSet(
                order,
                reference,
                curve,
                baseline,
                obs_times if order == 0 else None,
                obs_values if order == 0 else None,
            )
        )


PRESETS = ("chain-grid", "vdp-grid", "vdp-mse", "fn-standard", "fn-noise")


def preset_specs(name: str, *, trials: int = 100, seed: int = 0, workers: int = 1) -> list[ExperimentSpec]:
    """Reference experiment grids by preset name."""
    common = {"trials": trials, "seed": seed, "workers": workers}
    if name == "chain-grid":
        return [
            ExperimentSpec("linear-chain", n=n, noise_sigma=sigma, **common)
            for n in (50, 100)
            for sigma in (0.01, 0.05, 0.1)
        ]
    if name == "vdp-grid":
        return [ExperimentSpec("van-der-pol", n=n, noise_sigma=0.1, **common) for n in (50, 100)]
    if name == "vdp-mse":
        return [ExperimentSpec("van-der-pol", n=100, noise_sigma=0.1, mse=True, **{**common, "trials": 1})]
    if name == "fn-standard":
        return [ExperimentSpec("fitzhugh-nagumo", n=250, noise_sigma=0.3, theta_true=(0.2, 0.2, 3.0), **common)]
    if name == "fn-noise":
        return [
            ExperimentSpec("fitzhugh-nagumo", n=250, noise_sigma=sigma, theta_true=(5.0, 1.0, 0.5), **common)
            for sigma in (0.1, 0.2, 0.3)
        ]
    raise KeyError(f"Preset {name} not found")
