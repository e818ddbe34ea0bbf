"""Dynamical systems in latent-variable form, datasets and observation stacking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .exceptions import ConfigurationError, DimensionMismatchError
from .fields import FitzHughNagumoField, VanDerPolField
from .linearization import FixedPointTable, linearize
from .operators import Coefficient, DiffOperator, op_offset_grad

if TYPE_CHECKING:
    from .gram import ConstraintSet

DENOMINATOR_BOUNDS = (1e-3, 1e3)


@dataclass(frozen=True, slots=True)
class SystemModel:
    """Latent u = x_k with x_j = L_j u + ν_j and constraint v = L_v u + ν_v = 0.

    ``component_ops`` may hold ``None`` for a component with no operator
    image of u; such a component is neither observed nor predictable.
    """

    name: str
    dim: int
    latent_index: int
    component_ops: tuple[DiffOperator | None, ...]
    constraint_op: DiffOperator
    param_names: tuple[str, ...]
    observed_mask: tuple[bool, ...]
    param_bounds: tuple[tuple[float, float], ...] | None = None
    init_box: tuple[tuple[float, float], ...] | None = None
    fixed_points: FixedPointTable | None = None
    rebuild: Callable[[FixedPointTable], "SystemModel"] | None = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        if len(self.component_ops) != self.dim or len(self.observed_mask) != self.dim:
            raise ConfigurationError(f"{self.name}: need one operator and one mask flag per component")
        if not 0 <= self.latent_index < self.dim:
            raise ConfigurationError(f"{self.name}: latent index {self.latent_index} out of range")
        latent = self.component_ops[self.latent_index]
        if latent is None or not latent.is_identity:
            raise ConfigurationError(f"{self.name}: the latent component operator must be the identity")
        if not any(self.observed_mask):
            raise ConfigurationError(f"{self.name}: at least one component must be observed")
        for index, (op, observed) in enumerate(zip(self.component_ops, self.observed_mask)):
            if observed and op is None:
                raise ConfigurationError(f"{self.name}: observed component {index + 1} has no operator")
        if self.constraint_op.max_order < 1:
            raise ConfigurationError(f"{self.name}: the constraint operator must be differential")
        for name, box in (("param_bounds", self.param_bounds), ("init_box", self.init_box)):
            if box is not None and len(box) != self.n_params:
                raise ConfigurationError(f"{self.name}: {name} needs one pair per parameter")
            if box is not None and any(low > high for low, high in box):
                raise ConfigurationError(f"{self.name}: {name} has an empty interval")

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def observed_components(self) -> tuple[int, ...]:
        return tuple(index for index, flag in enumerate(self.observed_mask) if flag)

    def component_op(self, component: int) -> DiffOperator:
        if not 0 <= component < self.dim:
            raise ConfigurationError(f"{self.name}: no component {component + 1}")
        op = self.component_ops[component]
        if op is None:
            raise ConfigurationError(f"{self.name}: component {component + 1} has no operator form")
        return op

    def project(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.param_bounds is None:
            return theta
        low, high = np.array(self.param_bounds, dtype=float).T
        return np.clip(theta, low, high)

    def with_fixed_points(self, table: FixedPointTable) -> "SystemModel":
        if self.rebuild is None:
            return self
        return self.rebuild(table)


@dataclass(frozen=True, slots=True)
class Dataset:
    """Observations on a shared time axis; absent entries are ``NaN`` with ``present`` False."""

    times: np.ndarray
    observations: np.ndarray
    t_max: float
    present: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        observations = np.asarray(self.observations, dtype=float)
        if observations.ndim == 1:
            observations = observations[:, None]
        if times.ndim != 1 or observations.shape[0] != times.size:
            raise DimensionMismatchError("Dataset needs one observation row per time")
        present = ~np.isnan(observations) if self.present is None else np.asarray(self.present, dtype=bool)
        if present.shape != observations.shape:
            raise DimensionMismatchError("Presence flags must match the observation matrix")
        observations = np.where(present, observations, np.nan)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "observations", observations)
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "t_max", float(self.t_max))
        problems = self.problems()
        if problems:
            raise ConfigurationError("Invalid dataset:\n" + "\n".join(f"- {p}" for p in problems))

    def problems(self) -> list[str]:
        issues: list[str] = []
        if not np.isfinite(self.t_max) or self.t_max <= 0:
            issues.append(f"t_max must be positive, got {self.t_max}")
        if not np.all(np.isfinite(self.times)):
            issues.append("times must be finite")
            return issues
        if self.times.size and (self.times.min() < 0 or self.times.max() > self.t_max):
            issues.append(f"times must lie in [0, {self.t_max}]")
        if np.any(np.diff(self.times) < 0):
            issues.append("times must be sorted")
        for index in np.flatnonzero(np.diff(self.times) == 0):
            if np.any(self.present[index] & self.present[index + 1]):
                issues.append(f"duplicate time {self.times[index]} repeats a component")
        if not np.all(np.isfinite(self.observations[self.present])):
            issues.append("present observations must be finite")
        return issues

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.observations.shape[1]

    def component(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        rows = self.present[:, index]
        return self.times[rows], self.observations[rows, index]


@dataclass(frozen=True, slots=True)
class StackedObservations:
    """Present observations flattened component-major, time-minor."""

    components: np.ndarray
    rows: np.ndarray
    times: np.ndarray
    values: np.ndarray
    row_times: np.ndarray
    dim: int
    t_max: float

    def __len__(self) -> int:
        return self.values.size

    def blocks(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """(component, times, values) per observed component, in stacking order."""
        result = []
        for component in np.unique(self.components):
            mask = self.components == component
            result.append((int(component), self.times[mask], self.values[mask]))
        return result


def stack(dataset: Dataset) -> StackedObservations:
    components, rows = np.nonzero(dataset.present.T)
    return StackedObservations(
        components=components,
        rows=rows,
        times=dataset.times[rows],
        values=dataset.observations[rows, components],
        row_times=dataset.times.copy(),
        dim=dataset.dim,
        t_max=dataset.t_max,
    )


def unstack(stacked: StackedObservations) -> Dataset:
    observations = np.full((stacked.row_times.size, stacked.dim), np.nan)
    observations[stacked.rows, stacked.components] = stacked.values
    return Dataset(stacked.row_times.copy(), observations, stacked.t_max)


def _constraint_times(constraints: "ConstraintSet | Sequence[float] | None") -> np.ndarray:
    if constraints is None:
        return np.zeros(0)
    times = getattr(constraints, "times", constraints)
    return np.asarray(times, dtype=float)


def center_observations(
    model: SystemModel,
    dataset: Dataset,
    theta,
    constraints: "ConstraintSet | None" = None,
) -> np.ndarray:
    """Stacked ``y − ν`` for observations followed by ``−ν_v`` at constraint times."""
    value, _ = centered_targets(model, stack(dataset), _constraint_times(constraints), theta)
    return value


def centered_targets(
    model: SystemModel,
    stacked: StackedObservations,
    constraint_times: np.ndarray,
    theta,
) -> tuple[np.ndarray, np.ndarray]:
    """Centered target vector z and ∂z/∂Θ of shape ``(N, p)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    parts, grads = [], []
    for component, times, values in stacked.blocks():
        if not model.observed_mask[component]:
            raise ConfigurationError(f"{model.name}: component {component + 1} is not observable")
        offset, offset_grad = op_offset_grad(model.component_op(component), times, theta)
        parts.append(values - offset)
        grads.append(-offset_grad)
    if constraint_times.size:
        offset, offset_grad = op_offset_grad(model.constraint_op, constraint_times, theta)
        parts.append(-offset)
        grads.append(-offset_grad)
    if not parts:
        return np.zeros(0), np.zeros((0, theta.size))
    return np.concatenate(parts), np.concatenate(grads, axis=0)


def build_linear_chain() -> SystemModel:
    """x1 → x2 → x3 with u = x2 observed."""
    theta1, theta2 = Coefficient.parameter(0), Coefficient.parameter(1)
    d1, identity = DiffOperator.derivative(1), DiffOperator.identity()
    x1 = (d1 + identity.scaled(theta2)).divided(theta1)
    constraint = DiffOperator.derivative(2) + d1.scaled(theta1 + theta2) + identity.scaled(theta1 * theta2)
    return SystemModel(
        name="linear-chain",
        dim=3,
        latent_index=1,
        component_ops=(x1, identity, None),
        constraint_op=constraint,
        param_names=("theta1", "theta2"),
        observed_mask=(False, True, False),
        param_bounds=(DENOMINATOR_BOUNDS, DENOMINATOR_BOUNDS),
        init_box=((0.2, 3.0), (0.2, 3.0)),
    )


def build_van_der_pol(fixed_points: FixedPointTable) -> SystemModel:
    """u'' − J̃22 u' − J̃21 u − c̃2 = 0 with w = u' exact."""
    if fixed_points is None or len(fixed_points) == 0:
        raise ConfigurationError("van-der-pol: the fixed-point table is empty")
    lin = linearize(VanDerPolField(), fixed_points)
    d1 = DiffOperator.derivative(1)
    constraint = (
        DiffOperator.derivative(2)
        - d1.scaled(lin.jacobian(1, 1))
        - DiffOperator.identity().scaled(lin.jacobian(1, 0))
    ).shifted(-lin.offset(1))
    return SystemModel(
        name="van-der-pol",
        dim=2,
        latent_index=0,
        component_ops=(DiffOperator.identity(), d1),
        constraint_op=constraint,
        param_names=("theta",),
        observed_mask=(True, False),
        param_bounds=((0.0, 10.0),),
        init_box=((0.1, 1.5),),
        fixed_points=fixed_points,
        rebuild=build_van_der_pol,
    )


def fitzhugh_nagumo_x2_operator(lin) -> DiffOperator:
    """x2 = (u' − J̃11 u − c̃1) / J̃12."""
    return (
        (DiffOperator.derivative(1) - DiffOperator.identity().scaled(lin.jacobian(0, 0)))
        .shifted(-lin.offset(0))
        .divided(lin.jacobian(0, 1))
    )


def build_fitzhugh_nagumo(fixed_points: FixedPointTable) -> SystemModel:
    """Latent u = x1; the second equation, after substituting x2, is the constraint."""
    if fixed_points is None or len(fixed_points) == 0:
        raise ConfigurationError("fitzhugh-nagumo: the fixed-point table is empty")
    lin = linearize(FitzHughNagumoField(), fixed_points)
    identity = DiffOperator.identity()
    x2 = fitzhugh_nagumo_x2_operator(lin)
    # x2' = J̃21 u + J̃22 x2 + c̃2, with x2 itself an operator on u.
    constraint = (
        x2.differentiated()
        - identity.scaled(lin.jacobian(1, 0))
        - x2.scaled(lin.jacobian(1, 1))
    ).shifted(-lin.offset(1))
    return SystemModel(
        name="fitzhugh-nagumo",
        dim=2,
        latent_index=0,
        component_ops=(identity, x2),
        constraint_op=constraint,
        param_names=("theta1", "theta2", "theta3"),
        observed_mask=(True, True),
        param_bounds=((-10.0, 10.0), (-10.0, 10.0), (0.1, DENOMINATOR_BOUNDS[1])),
        init_box=((0.1, 6.0), (0.1, 1.5), (0.3, 4.0)),
        fixed_points=fixed_points,
        rebuild=build_fitzhugh_nagumo,
    )
