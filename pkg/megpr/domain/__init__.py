"""Kernels, operators, models and the estimation engine."""

from .exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DimensionMismatchError,
    DomainError,
    IllConditionedGramError,
    IntegrationError,
    MegprError,
    SamplerStarvationError,
    UnsupportedOrderError,
)
from .gram import ConstraintSet, HyperParameters, assemble_gram, lml_gradient, log_marginal_likelihood
from .kernels import MAX_ORDER, NoiseSpec, SEKernel, se_eval_deriv, se_eval_hyper_grad
from .linearization import FixedPointTable, choose_fixed_points, linearize, mc_marginalize_fixed_points
from .operators import Coefficient, DiffOperator, op_cov, op_cov_grad
from .optimizer import EstimationResult, semi_adam_fit
from .prediction import PosteriorCurve, gpr_baseline, predict, predict_constraint
from .sampling import sample_constraints_rejection, sample_constraints_uniform
from .systems import Dataset, SystemModel

__all__ = [
    "Coefficient",
    "ConfigurationError",
    "ConstraintSet",
    "Dataset",
    "DegenerateInputError",
    "DiffOperator",
    "DimensionMismatchError",
    "DomainError",
    "EstimationResult",
    "FixedPointTable",
    "HyperParameters",
    "IllConditionedGramError",
    "IntegrationError",
    "MAX_ORDER",
    "MegprError",
    "NoiseSpec",
    "PosteriorCurve",
    "SEKernel",
    "SamplerStarvationError",
    "SystemModel",
    "UnsupportedOrderError",
    "assemble_gram",
    "choose_fixed_points",
    "gpr_baseline",
    "linearize",
    "lml_gradient",
    "log_marginal_likelihood",
    "mc_marginalize_fixed_points",
    "op_cov",
    "op_cov_grad",
    "predict",
    "predict_constraint",
    "sample_constraints_rejection",
    "sample_constraints_uniform",
    "se_eval_deriv",
    "se_eval_hyper_grad",
    "semi_adam_fit",
]
