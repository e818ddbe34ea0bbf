"""Validation utilities for datasets and experiment specs."""

from __future__ import annotations

import numpy as np

from .config import ExperimentSpec
from .domain.systems import Dataset, SystemModel
from .registry import SystemRegistry


def validate_dataset(model: SystemModel, dataset: Dataset) -> list[str]:
    """Return list of problems that stop ``dataset`` from being fitted with ``model``."""
    errors = list(dataset.problems())
    if dataset.dim != model.dim:
        errors.append(f"Dataset has {dataset.dim} components but model '{model.name}' has {model.dim}.")
        return errors
    for component in range(model.dim):
        count = int(dataset.present[:, component].sum())
        if count and not model.observed_mask[component]:
            errors.append(f"Component {component + 1} is not observable in model '{model.name}' but has data.")
        if model.observed_mask[component] and count < 3:
            errors.append(f"Component {component + 1} needs at least 3 observations, found {count}.")
    if model.fixed_points is not None:
        span = model.fixed_points.times
        observed = dataset.times[dataset.present.any(axis=1)]
        if observed.size and (observed.min() < span[0] - 1e-9 or observed.max() > span[-1] + 1e-9):
            errors.append("Fixed points do not cover the observation span.")
    return errors


def validate_experiment(spec: ExperimentSpec, registry: SystemRegistry) -> list[str]:
    """Return list of problems in ``spec`` against the registered systems."""
    errors = spec.problems()
    try:
        system = registry.get(spec.system)
    except KeyError:
        errors.append(f"Unknown system '{spec.system}'. Known: {', '.join(registry.names())}.")
        return errors
    if spec.theta_true is not None and len(spec.theta_true) != len(system.param_names):
        errors.append(
            f"theta_true needs {len(system.param_names)} values for '{system.name}', got {len(spec.theta_true)}."
        )
    if spec.initial_state is not None and len(spec.initial_state) != system.field.dim:
        errors.append(f"initial_state needs {system.field.dim} values for '{system.name}'.")
    init = spec.estimator.theta_init
    if init is not None and len(init) != len(system.param_names):
        errors.append(f"theta_init needs {len(system.param_names)} values for '{system.name}'.")
    bounds = spec.estimator.theta_bounds
    if bounds is not None and len(bounds) != len(system.param_names):
        errors.append(f"theta_bounds needs {len(system.param_names)} pairs for '{system.name}'.")
    if spec.theta_true is not None and not np.all(np.isfinite(spec.theta_true)):
        errors.append("theta_true must be finite.")
    return errors
