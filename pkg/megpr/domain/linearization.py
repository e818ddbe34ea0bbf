"""Piecewise-constant linearization of nonlinear fields around anchor states."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Mapping, Sequence

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError, DomainError
from .fields import VectorField
from .operators import Coefficient, CoefficientKind
from .smoothing import fit_smoother

if TYPE_CHECKING:
    from .systems import Dataset

logger = logging.getLogger(__name__)

NOISE_RATIO_FOR_RAW_ANCHORS = 0.05


@dataclass(frozen=True, slots=True)
class FixedPointTable:
    """Anchors (t_k, s_k) with nearest-anchor lookup, ties going left.

    ``std`` holds per-anchor posterior standard deviations when the table
    came from the GP smoother.
    """

    times: np.ndarray
    states: np.ndarray
    std: np.ndarray | None = None
    source: str = "observations"

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ConfigurationError("Fixed-point table needs at least one anchor")
        if states.ndim != 2 or states.shape[0] != times.size:
            raise ConfigurationError("Fixed-point states must have one row per anchor")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("Anchor times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
            raise ConfigurationError("Anchor times and states must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if self.std is not None:
            std = np.asarray(self.std, dtype=float)
            if std.shape != states.shape or np.any(std < 0):
                raise ConfigurationError("Anchor std must match states and be non-negative")
            object.__setattr__(self, "std", std)

    def __len__(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def lookup(self, t) -> np.ndarray:
        """Index of the nearest anchor for each time."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        right = np.clip(np.searchsorted(self.times, t, side="left"), 0, self.times.size - 1)
        left = np.clip(right - 1, 0, self.times.size - 1)
        pick_left = np.abs(t - self.times[left]) <= np.abs(self.times[right] - t)
        return np.where(pick_left, left, right)

    def state_at(self, t) -> np.ndarray:
        return self.states[self.lookup(t)]

    def perturbed(self, rng: np.random.Generator) -> "FixedPointTable":
        """One draw of the anchor states from the smoother posterior."""
        if self.std is None:
            return self
        states = self.states + self.std * rng.standard_normal(self.states.shape)
        return replace(self, states=states)


@dataclass(frozen=True, slots=True)
class PiecewiseLinearization:
    """J̃_ij(t; Θ) and c̃_i(t; Θ) as piecewise-constant coefficients."""

    vector_field: VectorField
    table: FixedPointTable
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _anchor_values(self, theta: np.ndarray):
        key = theta.tobytes()
        cached = self._cache.get(key)
        if cached is None:
            states = self.table.states
            cached = (
                self.vector_field.jacobian(states, theta),
                self.vector_field.jacobian_theta_grad(states, theta),
                self.vector_field.offset(states, theta),
                self.vector_field.offset_theta_grad(states, theta),
            )
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = cached
        return cached

    def jacobian(self, i: int, j: int) -> Coefficient:
        lookup = self.table.lookup

        def evaluate(t: np.ndarray, theta: np.ndarray):
            jac, jac_grad, _, _ = self._anchor_values(theta)
            index = lookup(t)
            return jac[index, i, j], jac_grad[index, i, j, :]

        return Coefficient(evaluate, CoefficientKind.PIECEWISE)

    def offset(self, i: int) -> Coefficient:
        lookup = self.table.lookup

        def evaluate(t: np.ndarray, theta: np.ndarray):
            _, _, offset, offset_grad = self._anchor_values(theta)
            index = lookup(t)
            return offset[index, i], offset_grad[index, i, :]

        return Coefficient(evaluate, CoefficientKind.PIECEWISE)

    def state(self, j: int) -> Coefficient:
        """Anchor value s_j(t), independent of Θ."""
        lookup = self.table.lookup
        states = self.table.states

        def evaluate(t: np.ndarray, theta: np.ndarray):
            return states[lookup(t), j], np.zeros((t.size, theta.size))

        return Coefficient(evaluate, CoefficientKind.PIECEWISE)


def linearize(field: VectorField, table: FixedPointTable) -> PiecewiseLinearization:
    if table.dim != field.dim:
        raise ConfigurationError(
            f"Fixed points have {table.dim} components but the field has {field.dim}"
        )
    return PiecewiseLinearization(field, table)


def _present_rows(dataset: "Dataset", component: int) -> np.ndarray:
    return np.flatnonzero(dataset.present[:, component])


def fixed_points_from_observations(
    dataset: "Dataset", required: Sequence[int] | None = None
) -> FixedPointTable:
    """Anchors are the raw observations themselves."""
    required = range(dataset.dim) if required is None else required
    for component in required:
        if not np.all(dataset.present[:, component]):
            raise ConfigurationError(
                f"Component {component + 1} is not observed at every time; "
                "use fixed_points_from_gpr instead"
            )
    if np.any(np.diff(dataset.times) <= 0):
        raise ConfigurationError("Observation anchors need strictly increasing times")
    states = np.where(dataset.present, dataset.observations, 0.0)
    return FixedPointTable(dataset.times.copy(), states, source="observations")


def fixed_points_from_gpr(
    dataset: "Dataset",
    *,
    derived: Mapping[int, tuple[int, int]] | None = None,
    smoother_hyper: Mapping[int, tuple] | None = None,
) -> FixedPointTable:
    """Anchors at the observation times from per-component GP posterior means.

    ``derived`` maps an unobserved component to ``(source_component, order)``;
    for Van der Pol ``{1: (0, 1)}`` fills w with the posterior mean of u′.
    ``smoother_hyper`` optionally fixes ``(SEKernel, noise)`` per component.
    """
    derived = dict(derived or {})
    smoother_hyper = dict(smoother_hyper or {})
    times = np.unique(dataset.times)
    states = np.zeros((times.size, dataset.dim))
    std = np.zeros_like(states)
    fits = {}
    for component in range(dataset.dim):
        rows = _present_rows(dataset, component)
        if rows.size == 0:
            continue
        kernel, noise = smoother_hyper.get(component, (None, None))
        fits[component] = fit_smoother(
            dataset.times[rows], dataset.observations[rows, component], kernel=kernel, noise=noise
        )
        if fits[component].fallback:
            logger.warning("Anchor smoother for component %d fell back to heuristics", component + 1)
    for component in range(dataset.dim):
        if component in fits:
            mean, variance = fits[component].posterior(times)
        elif component in derived:
            source, order = derived[component]
            if source not in fits:
                raise ConfigurationError(
                    f"Component {component + 1} derives from unobserved component {source + 1}"
                )
            mean, variance = fits[source].posterior(times, order)
        else:
            raise ConfigurationError(f"Component {component + 1} is neither observed nor derivable")
        states[:, component] = mean
        std[:, component] = np.sqrt(variance)
    return FixedPointTable(times, states, std=std, source="gpr")


def choose_fixed_points(
    dataset: "Dataset",
    *,
    mode: str = "auto",
    required: Sequence[int] | None = None,
    derived: Mapping[int, tuple[int, int]] | None = None,
    noise_sigma: float | None = None,
) -> FixedPointTable:
    """Raw observations for small noise, the GP smoother otherwise."""
    required = list(range(dataset.dim) if required is None else required)
    if mode == "observations":
        return fixed_points_from_observations(dataset, required)
    if mode == "gpr":
        return fixed_points_from_gpr(dataset, derived=derived)
    if mode != "auto":
        raise ConfigurationError(f"Unknown fixed-point mode {mode!r}")

    fully_observed = all(np.all(dataset.present[:, c]) for c in required)
    if fully_observed and np.all(np.diff(dataset.times) > 0):
        values = dataset.observations[dataset.present]
        spread = float(np.std(values)) if values.size else 0.0
        if noise_sigma is None:
            noise_sigma = _estimated_noise(dataset, required)
        if noise_sigma <= NOISE_RATIO_FOR_RAW_ANCHORS * spread:
            logger.debug("Using raw observations as anchors (noise %.3g)", noise_sigma)
            return fixed_points_from_observations(dataset, required)
    return fixed_points_from_gpr(dataset, derived=derived)


def _estimated_noise(dataset: "Dataset", components: Sequence[int]) -> float:
    estimates = []
    for component in components:
        rows = _present_rows(dataset, component)
        fit = fit_smoother(dataset.times[rows], dataset.observations[rows, component])
        estimates.append(fit.noise)
    return max(estimates, default=0.0)


def mc_marginalize_fixed_points(
    table: FixedPointTable,
    samples: int,
    inner: Callable[[FixedPointTable], tuple],
    rng: np.random.Generator,
):
    """Average ``inner`` over draws of the anchor states.

    ``inner`` returns a tuple of objective and gradient arrays; the result
    is the elementwise sample mean of each entry.
    """
    if samples < 1:
        raise DegenerateInputError("Monte-Carlo marginalization needs at least one sample")
    totals = None
    for _ in range(samples):
        outputs = inner(table.perturbed(rng))
        if totals is None:
            totals = [np.array(output, dtype=float, copy=True) for output in outputs]
        else:
            for total, output in zip(totals, outputs):
                total += output
    averaged = [total / samples for total in totals]
    for value in averaged:
        if not np.all(np.isfinite(value)):
            raise DomainError("Monte-Carlo objective is not finite")
    return tuple(float(v) if v.ndim == 0 else v for v in averaged)
