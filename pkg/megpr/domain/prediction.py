"""Posterior curves for solution components and their derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConfigurationError, DomainError
from .gram import ConstraintSet, HyperParameters, assemble_gram, training_blocks
from .operators import DiffOperator, op_cov, op_cov_diag, op_offset
from .smoothing import fit_smoother
from .kernels import SEKernel
from .systems import Dataset, SystemModel, centered_targets, stack

VARIANCE_SLACK = 1e-10


@dataclass(frozen=True, slots=True)
class PosteriorCurve:
    query_times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    component: int
    order: int
    label: str = ""

    def __post_init__(self) -> None:
        if np.any(np.diff(self.query_times) < 0):
            raise ConfigurationError("Query times must be sorted in ascending order")
        if not np.all(np.isfinite(self.mean)):
            raise DomainError("Posterior mean is not finite")
        scale = max(1.0, float(np.max(np.abs(self.variance), initial=0.0)))
        if np.any(self.variance < -VARIANCE_SLACK * scale):
            raise DomainError(f"Posterior variance is negative (min {self.variance.min():.3g})")
        object.__setattr__(self, "variance", np.maximum(self.variance, 0.0))

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def band(self, width: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
        return self.mean - width * self.std, self.mean + width * self.std


def predict_operator(
    model: SystemModel,
    dataset: Dataset,
    constraints: ConstraintSet | None,
    theta,
    hyper: HyperParameters,
    operator: DiffOperator,
    query_times,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance of (operator u)(t*) given data and constraints."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    query = np.atleast_1d(np.asarray(query_times, dtype=float))
    stacked = stack(dataset)
    constraint_times = np.zeros(0) if constraints is None else constraints.ordered_times
    blocks = training_blocks(model, stacked, constraint_times)
    gram = assemble_gram(model, stacked, constraints, theta, hyper)
    z, _ = centered_targets(model, stacked, constraint_times, theta)

    cross = np.concatenate(
        [op_cov(operator, block.operator, hyper.kernel, query, block.times, theta) for block in blocks],
        axis=1,
    )
    mean = cross @ gram.solve(z) + op_offset(operator, query, theta)
    projected = solve_triangular(gram.factor, cross.T, lower=True, check_finite=False)
    variance = op_cov_diag(operator, operator, hyper.kernel, query, theta) - np.sum(projected**2, axis=0)
    return mean, variance


def predict(
    model: SystemModel,
    dataset: Dataset,
    constraints: ConstraintSet | None,
    theta,
    hyper: HyperParameters,
    component: int,
    order: int,
    query_times,
) -> PosteriorCurve:
    """Posterior of the order-th derivative of component ``component`` (0-based)."""
    operator = model.component_op(component).differentiated(order)
    query = np.atleast_1d(np.asarray(query_times, dtype=float))
    mean, variance = predict_operator(model, dataset, constraints, theta, hyper, operator, query)
    return PosteriorCurve(query, mean, variance, component, order, f"x{component + 1}^({order})")


def predict_constraint(
    model: SystemModel,
    dataset: Dataset,
    constraints: ConstraintSet | None,
    theta,
    hyper: HyperParameters,
    query_times,
) -> PosteriorCurve:
    """Posterior of the constraint residual v."""
    query = np.atleast_1d(np.asarray(query_times, dtype=float))
    mean, variance = predict_operator(model, dataset, constraints, theta, hyper, model.constraint_op, query)
    return PosteriorCurve(query, mean, variance, -1, 0, "v")


def gpr_baseline(
    times,
    values,
    query_times,
    order: int,
    *,
    kernel: SEKernel | None = None,
    noise: float | None = None,
    center: bool = True,
    component: int = 0,
) -> PosteriorCurve:
    """Unconstrained GP regression of one component and its derivatives."""
    fit = fit_smoother(times, values, kernel=kernel, noise=noise, center=center)
    query = np.atleast_1d(np.asarray(query_times, dtype=float))
    mean, variance = fit.posterior(query, order)
    return PosteriorCurve(query, mean, variance, component, order, f"gpr x{component + 1}^({order})")
