"""Fixed-step classical Runge-Kutta reference solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, IntegrationError
from .fields import VectorField

STEPS_PER_HORIZON = 10_000


@dataclass(frozen=True, slots=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    second_derivatives: np.ndarray

    def component(self, index: int, order: int = 0) -> np.ndarray:
        source = (self.states, self.derivatives, self.second_derivatives)[order]
        return source[:, index]


def rk4_step(field: VectorField, theta: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    k1 = field.rhs(x, theta)
    k2 = field.rhs(x + 0.5 * h * k1, theta)
    k3 = field.rhs(x + 0.5 * h * k2, theta)
    k4 = field.rhs(x + h * k3, theta)
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_reference(field: VectorField, theta, x0, t_grid, *, step: float | None = None) -> Trajectory:
    """Integrate from t=0 and report the state at every grid time.

    Each output interval is split into equal substeps no longer than ``step``
    (default ``t_grid[-1] / 10_000``).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (field.dim,):
        raise DomainError(f"Initial state needs {field.dim} components")
    if grid.size == 0 or grid[0] < 0 or np.any(np.diff(grid) < 0):
        raise DomainError("Integration grid must be non-empty, non-negative and sorted")
    step = step if step is not None else (grid[-1] / STEPS_PER_HORIZON or 1.0)

    states = np.empty((grid.size, field.dim))
    t = 0.0
    for index, target in enumerate(grid):
        span = target - t
        if span > 0:
            substeps = max(1, int(np.ceil(span / step - 1e-9)))
            h = span / substeps
            for sub in range(substeps):
                x = rk4_step(field, theta, x, h)
                if not np.all(np.isfinite(x)):
                    raise IntegrationError(t + (sub + 1) * h)
            t = float(target)
        states[index] = x
    return Trajectory(
        times=grid,
        states=states,
        derivatives=field.rhs(states, theta),
        second_derivatives=field.second_derivative(states, theta),
    )
