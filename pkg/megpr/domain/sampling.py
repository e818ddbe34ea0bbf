"""Constraint-location samplers: uniform and potential-weighted rejection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DegenerateInputError, SamplerStarvationError
from .gram import ConstraintSet, HyperParameters, PotentialVariance
from .systems import Dataset, SystemModel

logger = logging.getLogger(__name__)

STARVATION_RATE = 1e-4
STARVATION_PROPOSALS = 1_000_000
BATCH_SIZE = 1024


def sample_constraints_uniform(t_max: float, n_c: int, rng: np.random.Generator) -> ConstraintSet:
    if n_c < 1:
        raise DegenerateInputError("At least one constraint time is required")
    return ConstraintSet(rng.uniform(0.0, t_max, size=n_c), "uniform", t_max)


@dataclass(slots=True)
class RejectionSampler:
    """Accepts t ~ U(0, t_max) with q(t) = exp(−(V − σ_v²) / (¼(η − σ_v²)))."""

    potential: Callable[[np.ndarray], np.ndarray]
    eta: float
    sigma_v: float
    t_max: float
    proposals: int = 0
    accepted: int = 0

    def acceptance_probability(self, t) -> np.ndarray:
        floor = self.sigma_v**2
        spread = 0.25 * (self.eta - floor)
        excess = np.maximum(np.asarray(self.potential(t), dtype=float) - floor, 0.0)
        if spread <= 0:
            return np.ones_like(excess)
        return np.exp(-excess / spread)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0

    def sample(self, n_c: int, rng: np.random.Generator) -> ConstraintSet:
        if n_c < 1:
            raise DegenerateInputError("At least one constraint time is required")
        kept: list[np.ndarray] = []
        count = 0
        while count < n_c:
            proposals = rng.uniform(0.0, self.t_max, size=BATCH_SIZE)
            accept = rng.uniform(size=BATCH_SIZE) < self.acceptance_probability(proposals)
            hits = np.flatnonzero(accept)
            need = n_c - count
            if hits.size > need:
                # Proposals past the last needed acceptance are not counted.
                hits = hits[:need]
                used = int(hits[-1]) + 1
            else:
                used = BATCH_SIZE
            taken = proposals[hits]
            self.proposals += used
            self.accepted += taken.size
            kept.append(taken)
            count += taken.size
            if self.proposals >= STARVATION_PROPOSALS and self.acceptance_rate < STARVATION_RATE:
                raise SamplerStarvationError(self.proposals, self.accepted)
        return ConstraintSet(np.concatenate(kept), "rejection", self.t_max)


def rejection_sampler(
    model: SystemModel, dataset: Dataset, theta, hyper: HyperParameters
) -> RejectionSampler:
    potential = PotentialVariance(model, dataset, theta, hyper)
    return RejectionSampler(potential, potential.eta(dataset.t_max), hyper.sigma_v, dataset.t_max)


def sample_constraints_rejection(
    model: SystemModel,
    dataset: Dataset,
    theta,
    hyper: HyperParameters,
    n_c: int,
    rng: np.random.Generator,
) -> ConstraintSet:
    sampler = rejection_sampler(model, dataset, theta, hyper)
    constraints = sampler.sample(n_c, rng)
    logger.debug("Rejection sampling accepted %d of %d proposals", sampler.accepted, sampler.proposals)
    return constraints
