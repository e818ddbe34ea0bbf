"""Pytest fixtures for megpr."""

from __future__ import annotations

import numpy as np
import pytest

from ..config import EstimatorConfig
from ..domain.systems import Dataset
from ..registry import SystemRegistry, default_registry
from .factory import DatasetFactory


@pytest.fixture()
def registry() -> SystemRegistry:
    return default_registry()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture()
def chain_dataset() -> Dataset:
    return DatasetFactory(seed=7).chain(n=40, sigma=0.01)


def quick_config(**overrides) -> EstimatorConfig:
    """A short-running estimator setup for unit tests."""
    values = {"iterations": 60, "n_constraints": 20, "seed": 0}
    values.update(overrides)
    return EstimatorConfig(**values)
