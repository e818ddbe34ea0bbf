"""Joint Gram over observations and constraint residuals, and its likelihood."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DegenerateInputError, DimensionMismatchError, DomainError
from .kernels import NoiseSpec, SEKernel
from .linalg import cholesky_log_det, cholesky_solve, stable_cholesky
from .operators import DiffOperator, op_cov, op_cov_diag, op_cov_grad
from .systems import Dataset, StackedObservations, SystemModel, centered_targets, stack

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, slots=True)
class HyperParameters:
    """β: the SE kernel plus per-observed-component noise and the preset σ_v."""

    kernel: SEKernel
    noise: NoiseSpec

    @classmethod
    def create(
        cls,
        amplitude: float,
        length_scale: float,
        obs_noise: Sequence[float],
        constraint_reg: float = 1e-4,
    ) -> "HyperParameters":
        return cls(SEKernel(amplitude, length_scale), NoiseSpec(tuple(obs_noise), constraint_reg))

    @property
    def amplitude(self) -> float:
        return self.kernel.amplitude

    @property
    def length_scale(self) -> float:
        return self.kernel.length_scale

    @property
    def obs_noise(self) -> tuple[float, ...]:
        return self.noise.obs_noise

    @property
    def sigma_v(self) -> float:
        return self.noise.constraint_reg

    def as_vector(self) -> np.ndarray:
        """(β_α, β_l, σ_y...) without σ_v."""
        return np.array([self.amplitude, self.length_scale, *self.obs_noise], dtype=float)

    @classmethod
    def from_vector(cls, vector: Sequence[float], constraint_reg: float) -> "HyperParameters":
        amplitude, length_scale, *noise = (float(v) for v in vector)
        return cls.create(amplitude, length_scale, noise, constraint_reg)


@dataclass(frozen=True, slots=True)
class ConstraintSet:
    times: np.ndarray
    provenance: str = "uniform"
    t_max: float | None = None

    def __post_init__(self) -> None:
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        if times.size < 1:
            raise DegenerateInputError("A constraint set needs at least one time")
        if not np.all(np.isfinite(times)):
            raise DomainError("Constraint times must be finite")
        if self.t_max is not None and (times.min() < 0 or times.max() > self.t_max):
            raise DomainError(f"Constraint times must lie in [0, {self.t_max}]")
        if self.provenance not in ("uniform", "rejection", "fixed"):
            raise DomainError(f"Unknown constraint provenance {self.provenance!r}")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return self.times.size

    @property
    def ordered_times(self) -> np.ndarray:
        """Times in canonical ascending order; the joint Gram is built on these."""
        return np.sort(self.times)


@dataclass(frozen=True, slots=True)
class TrainingBlock:
    label: str
    operator: DiffOperator
    times: np.ndarray
    noise_index: int | None

    @property
    def size(self) -> int:
        return self.times.size


def training_blocks(
    model: SystemModel, stacked: StackedObservations, constraint_times: np.ndarray
) -> list[TrainingBlock]:
    """Observation blocks in stacking order, then the constraint block."""
    observed = model.observed_components
    blocks = []
    for component, times, _ in stacked.blocks():
        if component not in observed:
            raise DimensionMismatchError(f"{model.name}: component {component + 1} is not observable")
        blocks.append(
            TrainingBlock(f"x{component + 1}", model.component_op(component), times, observed.index(component))
        )
    if constraint_times.size:
        blocks.append(TrainingBlock("v", model.constraint_op, constraint_times, None))
    return blocks


@dataclass(frozen=True, slots=True)
class JointGram:
    """K with noise on the diagonal, its Cholesky factor and log-determinant."""

    matrix: np.ndarray
    factor: np.ndarray
    log_det: float
    jitter: float
    n_obs: int
    n_constraints: int

    @classmethod
    def from_matrix(cls, matrix, n_constraints: int = 0, **context) -> "JointGram":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError("Gram must be square")
        factor, jitter = stable_cholesky(matrix, **context)
        size = matrix.shape[0]
        return cls(matrix, factor, cholesky_log_det(factor), jitter, size - n_constraints, n_constraints)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cholesky_solve(self.factor, rhs)

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.size))


def _noise_diagonal(blocks: list[TrainingBlock], hyper: HyperParameters) -> np.ndarray:
    parts = []
    for block in blocks:
        sigma = hyper.sigma_v if block.noise_index is None else hyper.obs_noise[block.noise_index]
        parts.append(np.full(block.size, sigma**2))
    return np.concatenate(parts) if parts else np.zeros(0)


def _assemble(
    blocks: list[TrainingBlock], theta: np.ndarray, kernel: SEKernel, *, with_grad: bool
):
    offsets = np.cumsum([0] + [block.size for block in blocks])
    size = int(offsets[-1])
    matrix = np.zeros((size, size))
    d_theta = np.zeros((size, size, theta.size)) if with_grad else None
    d_hyper = np.zeros((size, size, 2)) if with_grad else None
    for i, left in enumerate(blocks):
        rows = slice(offsets[i], offsets[i + 1])
        for j in range(i, len(blocks)):
            right = blocks[j]
            cols = slice(offsets[j], offsets[j + 1])
            if with_grad:
                value, grad_theta, grad_hyper = op_cov_grad(
                    left.operator, right.operator, kernel, left.times, right.times, theta
                )
                d_theta[rows, cols] = grad_theta
                d_theta[cols, rows] = grad_theta.transpose(1, 0, 2)
                d_hyper[rows, cols] = grad_hyper
                d_hyper[cols, rows] = grad_hyper.transpose(1, 0, 2)
            else:
                value = op_cov(left.operator, right.operator, kernel, left.times, right.times, theta)
            matrix[rows, cols] = value
            matrix[cols, rows] = value.T
    return matrix, d_theta, d_hyper


def _prepare(model, dataset, constraints):
    stacked = dataset if isinstance(dataset, StackedObservations) else stack(dataset)
    constraint_times = np.zeros(0) if constraints is None else constraints.ordered_times
    return stacked, constraint_times, training_blocks(model, stacked, constraint_times)


def _checked_hyper(model: SystemModel, hyper: HyperParameters) -> None:
    if len(hyper.obs_noise) != len(model.observed_components):
        raise DimensionMismatchError(
            f"{model.name}: expected {len(model.observed_components)} noise levels, "
            f"got {len(hyper.obs_noise)}"
        )


def assemble_gram(
    model: SystemModel,
    dataset: Dataset | StackedObservations,
    constraints: ConstraintSet | None,
    theta,
    hyper: HyperParameters,
) -> JointGram:
    _checked_hyper(model, hyper)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    _, constraint_times, blocks = _prepare(model, dataset, constraints)
    matrix, _, _ = _assemble(blocks, theta, hyper.kernel, with_grad=False)
    matrix[np.diag_indices_from(matrix)] += _noise_diagonal(blocks, hyper)
    return JointGram.from_matrix(
        matrix, constraint_times.size, theta=theta, hyper=hyper.as_vector()
    )


def log_marginal_likelihood(gram: JointGram, z) -> float:
    z = np.asarray(z, dtype=float)
    if z.shape != (gram.size,):
        raise DimensionMismatchError(f"Target has shape {z.shape}, Gram has size {gram.size}")
    projected = solve_triangular(gram.factor, z, lower=True, check_finite=False)
    return float(-0.5 * projected @ projected - 0.5 * gram.log_det - 0.5 * gram.size * LOG_2PI)


@dataclass(frozen=True, slots=True)
class LikelihoodGradient:
    value: float
    grad_theta: np.ndarray
    grad_hyper: np.ndarray
    gram: JointGram
    alpha: np.ndarray

    def __iter__(self):
        return iter((self.value, self.grad_theta, self.grad_hyper))


def lml_gradient(
    model: SystemModel,
    dataset: Dataset | StackedObservations,
    constraints: ConstraintSet | None,
    theta,
    hyper: HyperParameters,
    z=None,
) -> LikelihoodGradient:
    """Log marginal likelihood with gradients in Θ and in (β_α, β_l, σ_y...).

    When ``z`` is supplied it is held fixed; otherwise the centered targets
    are recomputed at Θ and their offset dependence enters the gradient.
    """
    _checked_hyper(model, hyper)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    stacked, constraint_times, blocks = _prepare(model, dataset, constraints)
    matrix, d_theta, d_hyper = _assemble(blocks, theta, hyper.kernel, with_grad=True)
    noise_diag = _noise_diagonal(blocks, hyper)
    matrix[np.diag_indices_from(matrix)] += noise_diag
    gram = JointGram.from_matrix(matrix, constraint_times.size, theta=theta, hyper=hyper.as_vector())

    if z is None:
        z, dz_theta = centered_targets(model, stacked, constraint_times, theta)
    else:
        z = np.asarray(z, dtype=float)
        dz_theta = np.zeros((z.size, theta.size))
    value = log_marginal_likelihood(gram, z)

    alpha = gram.solve(z)
    weights = np.outer(alpha, alpha) - gram.inverse()
    grad_theta = 0.5 * np.einsum("ij,ijk->k", weights, d_theta) - alpha @ dz_theta

    grad_hyper = np.zeros(2 + len(hyper.obs_noise))
    grad_hyper[:2] = 0.5 * np.einsum("ij,ijk->k", weights, d_hyper)
    start = 0
    for block in blocks:
        if block.noise_index is not None:
            rows = slice(start, start + block.size)
            sigma = hyper.obs_noise[block.noise_index]
            grad_hyper[2 + block.noise_index] += sigma * np.trace(weights[rows, rows])
        start += block.size
    return LikelihoodGradient(value, grad_theta, grad_hyper, gram, alpha)


class PotentialVariance:
    """V(t): posterior variance of the constraint residual given the data."""

    def __init__(self, model: SystemModel, dataset: Dataset, theta, hyper: HyperParameters) -> None:
        _checked_hyper(model, hyper)
        self.model = model
        self.theta = np.atleast_1d(np.asarray(theta, dtype=float))
        self.hyper = hyper
        _, _, self.blocks = _prepare(model, dataset, None)
        self.gram = assemble_gram(model, dataset, None, self.theta, hyper)

    def prior(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        op = self.model.constraint_op
        return op_cov_diag(op, op, self.hyper.kernel, t, self.theta) + self.hyper.sigma_v**2

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cross = np.concatenate(
            [
                op_cov(block.operator, self.model.constraint_op, self.hyper.kernel, block.times, t, self.theta)
                for block in self.blocks
            ],
            axis=0,
        )
        projected = solve_triangular(self.gram.factor, cross, lower=True, check_finite=False)
        return np.maximum(self.prior(t) - np.sum(projected**2, axis=0), self.hyper.sigma_v**2)

    def eta(self, t_max: float, grid_size: int = 512) -> float:
        """Upper bound of V from the prior variance on a uniform grid."""
        return float(np.max(self.prior(np.linspace(0.0, t_max, grid_size))))


def potential_variance(model: SystemModel, dataset: Dataset, theta, hyper: HyperParameters, t):
    values = PotentialVariance(model, dataset, theta, hyper)(t)
    return float(values[0]) if np.ndim(t) == 0 else values
