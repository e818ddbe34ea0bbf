"""Exceptions raised by megpr domain services."""

from __future__ import annotations

from typing import Sequence


class MegprError(RuntimeError):
    """Base class for domain exceptions."""


class ConfigurationError(MegprError):
    """Raised when a model, dataset or config file is inconsistent."""


class UnsupportedOrderError(MegprError):
    """Raised when a derivative order exceeds the supported maximum."""

    def __init__(self, order: int, maximum: int) -> None:
        super().__init__(f"Derivative order {order} exceeds supported maximum {maximum}")
        self.order = order
        self.maximum = maximum


class DomainError(MegprError):
    """Raised for non-finite inputs or singular coefficients."""


class DimensionMismatchError(MegprError):
    """Raised when vector and matrix sizes disagree."""


class DegenerateInputError(MegprError):
    """Raised for empty sample sets and zero sample counts."""


class IllConditionedGramError(MegprError):
    """Raised when the joint Gram cannot be factorized at the maximum jitter."""

    def __init__(
        self,
        message: str,
        *,
        theta: Sequence[float] | None = None,
        hyper: Sequence[float] | None = None,
    ) -> None:
        super().__init__(message)
        self.theta = tuple(theta) if theta is not None else None
        self.hyper = tuple(hyper) if hyper is not None else None


class SamplerStarvationError(MegprError):
    """Raised when rejection sampling accepts almost nothing."""

    def __init__(self, proposals: int, accepted: int) -> None:
        super().__init__(
            f"Rejection sampler starved: {accepted} accepted out of {proposals} proposals"
        )
        self.proposals = proposals
        self.accepted = accepted


class IntegrationError(MegprError):
    """Raised when the reference integrator produces a non-finite state."""

    def __init__(self, time: float) -> None:
        super().__init__(f"Integration produced a non-finite state at t={time:.6g}")
        self.time = time


class ExperimentFailedError(MegprError):
    """Raised when too many trials of an experiment fail."""

    def __init__(self, failures: int, trials: int) -> None:
        super().__init__(f"{failures} of {trials} trials failed")
        self.failures = failures
        self.trials = trials


class AcceptanceFailure(MegprError):
    """Raised by `--check` mode when a reproduction gate fails."""
