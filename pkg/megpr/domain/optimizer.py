"""Semi-ADAM: joint ascent on (Θ, log β) with a resampled constraint batch."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import DomainError, IllConditionedGramError, SamplerStarvationError
from .gram import ConstraintSet, HyperParameters, lml_gradient
from .linearization import mc_marginalize_fixed_points
from .sampling import rejection_sampler, sample_constraints_uniform
from .systems import Dataset, StackedObservations, SystemModel, stack

if TYPE_CHECKING:
    from ..config import EstimatorConfig

logger = logging.getLogger(__name__)

POOL_FACTOR = 10


class Adam:
    """Adam moments for one flat parameter vector; updates are proposed then committed."""

    def __init__(self, size: int, *, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> None:
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def propose(self, params: np.ndarray, grad: np.ndarray, lr: float):
        """Descent step on ``grad``; returns new params and the pending moment state."""
        t = self.t + 1
        m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        v = self.beta2 * self.v + (1.0 - self.beta2) * (grad * grad)
        step_size = lr / (1.0 - self.beta1**t)
        denom = np.sqrt(v / (1.0 - self.beta2**t)) + self.epsilon
        return params - step_size * m / denom, (m, v, t)

    def commit(self, state) -> None:
        self.m, self.v, self.t = state


@dataclass(slots=True)
class TraceRecord:
    iteration: int
    objective: float
    smoothed: float
    grad_norm: float
    theta: tuple[float, ...]
    hyper: tuple[float, ...]


@dataclass(slots=True)
class FitDiagnostics:
    iterations: int = 0
    reason: str = "max-iters"
    final_jitter: float = 0.0
    retries: int = 0
    best_iteration: int = 0
    best_smoothed: float = float("-inf")
    initial_smoothed: float = float("-inf")
    constraint_residual: float = 0.0


@dataclass(slots=True)
class EstimationResult:
    theta_hat: np.ndarray
    hyper_hat: HyperParameters
    constraints: ConstraintSet
    param_names: tuple[str, ...]
    trace: list[TraceRecord] = field(default_factory=list)
    diagnostics: FitDiagnostics = field(default_factory=FitDiagnostics)


def initial_hyper(
    stacked: StackedObservations, n_noise: int, sigma_v: float, sigma_y_init: float | None = None
) -> HyperParameters:
    gaps = np.diff(np.unique(stacked.times))
    length_scale = 2.0 * float(np.median(gaps)) if gaps.size else 1.0
    amplitude = float(np.std(stacked.values)) or 1.0
    noise = sigma_y_init if sigma_y_init is not None else 0.1 * amplitude
    return HyperParameters.create(amplitude, length_scale, [noise] * n_noise, sigma_v)


def _initial_theta(model: SystemModel, config: EstimatorConfig, rng: np.random.Generator) -> np.ndarray:
    if config.theta_init is not None:
        if len(config.theta_init) != model.n_params:
            raise DomainError(f"theta_init needs {model.n_params} values, got {len(config.theta_init)}")
        return np.array(config.theta_init, dtype=float)
    box = config.theta_bounds or model.init_box or model.param_bounds
    if box is None:
        return np.ones(model.n_params)
    low, high = np.array(box, dtype=float).T
    return rng.uniform(low, high)


class _ConstraintSource:
    """Fresh constraint batches for each iteration."""

    def __init__(self, model, dataset, config, n_c, rng) -> None:
        self.model = model
        self.dataset = dataset
        self.config = config
        self.n_c = n_c
        self.rng = rng
        self.pool: np.ndarray | None = None

    def refresh(self, iteration: int, theta: np.ndarray, hyper: HyperParameters) -> None:
        if self.config.constraint_mode != "rejection" or iteration % self.config.refresh_every:
            return
        try:
            sampler = rejection_sampler(self.model, self.dataset, theta, hyper)
            self.pool = sampler.sample(POOL_FACTOR * self.n_c, self.rng).times
        except (IllConditionedGramError, SamplerStarvationError) as exc:
            logger.warning("Rejection pool refresh failed at iteration %d: %s", iteration, exc)
            self.pool = None

    def draw(self) -> ConstraintSet:
        if self.pool is None:
            return sample_constraints_uniform(self.dataset.t_max, self.n_c, self.rng)
        times = self.rng.choice(self.pool, size=self.n_c, replace=False)
        return ConstraintSet(times, "rejection", self.dataset.t_max)


def _unpack(x: np.ndarray, p: int, sigma_v: float) -> tuple[np.ndarray, HyperParameters]:
    return x[:p], HyperParameters.from_vector(np.exp(x[p:]), sigma_v)


def _evaluate(model, stacked, constraints, x, p, sigma_v, mc_samples, rng):
    theta, hyper = _unpack(x, p, sigma_v)
    if mc_samples > 1 and model.fixed_points is not None and model.rebuild is not None:
        def inner(table):
            result = lml_gradient(model.with_fixed_points(table), stacked, constraints, theta, hyper)
            residual = _constraint_residual(result.alpha, len(constraints), sigma_v)
            return (*result, result.gram.jitter, residual)

        # jitter and residual are sample means like the objective
        value, grad_theta, grad_hyper, jitter, residual = mc_marginalize_fixed_points(
            model.fixed_points, mc_samples, inner, rng
        )
    else:
        result = lml_gradient(model, stacked, constraints, theta, hyper)
        value, grad_theta, grad_hyper = result
        jitter = result.gram.jitter
        residual = _constraint_residual(result.alpha, len(constraints), sigma_v)
    if not np.isfinite(value) or not np.all(np.isfinite(grad_theta)) or not np.all(np.isfinite(grad_hyper)):
        raise IllConditionedGramError("Objective or gradient is not finite", theta=theta, hyper=hyper.as_vector())
    grad = np.concatenate([grad_theta, grad_hyper * np.exp(x[p:])])
    return float(value), grad, jitter, residual


def _constraint_residual(alpha: np.ndarray, n_c: int, sigma_v: float) -> float:
    """RMS of the posterior-mean constraint residual at the training constraint times."""
    if n_c == 0:
        return 0.0
    return float(sigma_v**2 * np.sqrt(np.mean(alpha[-n_c:] ** 2)))


def semi_adam_fit(
    model: SystemModel,
    dataset: Dataset,
    config: EstimatorConfig,
    *,
    rng: np.random.Generator | None = None,
) -> EstimationResult:
    """Maximize the log marginal likelihood over (Θ, β) with Semi-ADAM.

    The observation block is fixed; constraint times are redrawn every
    iteration. The returned point is the best one by the EMA-smoothed objective,
    together with the constraint set it was evaluated on.
    """
    config.validate()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    stacked = stack(dataset)
    p = model.n_params
    n_noise = len(model.observed_components)
    n_c = config.n_constraints or dataset.n
    bounds = config.theta_bounds or model.param_bounds
    low, high = (np.array(bounds, dtype=float).T if bounds else (None, None))

    theta0 = _initial_theta(model, config, rng)
    if low is not None:
        theta0 = np.clip(theta0, low, high)
    hyper0 = initial_hyper(stacked, n_noise, config.sigma_v, config.sigma_y_init)
    x = np.concatenate([theta0, np.log(hyper0.as_vector())])
    logger.info("Fitting %s: n=%d, n_c=%d, theta0=%s", model.name, dataset.n, n_c, np.round(theta0, 4))

    source = _ConstraintSource(model, dataset, config, n_c, rng)
    source.refresh(0, theta0, hyper0)
    constraints = source.draw()
    value, grad, jitter, residual = _evaluate(model, stacked, constraints, x, p, config.sigma_v, config.mc_samples, rng)

    adam = Adam(x.size, beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
    diagnostics = FitDiagnostics(final_jitter=jitter, constraint_residual=residual)
    trace: list[TraceRecord] = []
    smoothed_history: list[float] = []
    smoothed = value
    best_x, best_constraints = x.copy(), constraints
    diagnostics.initial_smoothed = diagnostics.best_smoothed = smoothed

    for iteration in range(config.iterations):
        if iteration:
            smoothed = config.ema_decay * smoothed + (1.0 - config.ema_decay) * value
        smoothed_history.append(smoothed)
        theta, hyper = _unpack(x, p, config.sigma_v)
        trace.append(
            TraceRecord(
                iteration, value, smoothed, float(np.linalg.norm(grad)),
                tuple(float(v) for v in theta), tuple(float(v) for v in hyper.as_vector()),
            )
        )
        logger.debug("iter %d objective %.6g smoothed %.6g theta %s", iteration, value, smoothed, theta)
        if smoothed > diagnostics.best_smoothed:
            diagnostics.best_smoothed = smoothed
            diagnostics.best_iteration = iteration
            best_x, best_constraints = x.copy(), constraints
        diagnostics.iterations = iteration + 1

        window = config.plateau_window
        if iteration >= window:
            past = smoothed_history[iteration - window]
            if diagnostics.best_smoothed - past < config.plateau_tol * max(abs(past), 1.0):
                diagnostics.reason = "plateau"
                break
        if iteration == config.iterations - 1:
            break

        source.refresh(iteration + 1, theta, hyper)
        lr = config.learning_rate
        for attempt in range(config.max_retries + 1):
            candidate, state = adam.propose(x, -grad, lr)
            if low is not None:
                candidate[:p] = np.clip(candidate[:p], low, high)
            next_constraints = source.draw()
            try:
                value_c, grad_c, jitter, residual = _evaluate(
                    model, stacked, next_constraints, candidate, p, config.sigma_v, config.mc_samples, rng
                )
            except (IllConditionedGramError, DomainError) as exc:
                diagnostics.retries += 1
                lr *= 0.5
                logger.warning("Step %d rejected (%s); retrying at lr=%.3g", iteration, exc, lr)
                continue
            adam.commit(state)
            x, value, grad, constraints = candidate, value_c, grad_c, next_constraints
            diagnostics.final_jitter = jitter
            diagnostics.constraint_residual = residual
            break
        else:
            theta_bad, hyper_bad = _unpack(candidate, p, config.sigma_v)
            raise IllConditionedGramError(
                f"Step {iteration} failed after {config.max_retries} retries",
                theta=theta_bad,
                hyper=hyper_bad.as_vector(),
            )

    theta_hat, hyper_hat = _unpack(best_x, p, config.sigma_v)
    logger.info(
        "Fit finished after %d iterations (%s): theta=%s", diagnostics.iterations, diagnostics.reason,
        np.round(theta_hat, 4),
    )
    return EstimationResult(
        theta_hat=theta_hat.copy(),
        hyper_hat=hyper_hat,
        constraints=best_constraints,
        param_names=model.param_names,
        trace=trace,
        diagnostics=diagnostics,
    )
