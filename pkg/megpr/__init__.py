"""megpr public API."""

from .config import EstimatorConfig, ExperimentSpec, MegprConfig
from .domain.optimizer import EstimationResult, semi_adam_fit
from .domain.prediction import PosteriorCurve, gpr_baseline, predict
from .domain.systems import Dataset, SystemModel
from .registry import SystemDefinition, SystemRegistry, default_registry

__all__ = [
    "Dataset",
    "EstimationResult",
    "EstimatorConfig",
    "ExperimentSpec",
    "MegprConfig",
    "PosteriorCurve",
    "SystemDefinition",
    "SystemModel",
    "SystemRegistry",
    "default_registry",
    "gpr_baseline",
    "predict",
    "semi_adam_fit",
]
