"""Testing utilities for megpr."""

from .factory import DatasetFactory, chain_intermediate
from .fixtures import chain_dataset, quick_config, registry, rng

__all__ = [
    "DatasetFactory",
    "chain_dataset",
    "chain_intermediate",
    "quick_config",
    "registry",
    "rng",
]
