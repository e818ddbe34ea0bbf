"""Cholesky factorization with escalating diagonal jitter."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky

from .exceptions import IllConditionedGramError

logger = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_CAP = 1e-4
JITTER_FACTOR = 10.0


def stable_cholesky(
    matrix: np.ndarray,
    *,
    theta: Sequence[float] | None = None,
    hyper: Sequence[float] | None = None,
) -> tuple[np.ndarray, float]:
    """Return the lower factor and the absolute jitter that was needed.

    Jitter is relative to the mean diagonal and grows from JITTER_START by
    JITTER_FACTOR up to JITTER_CAP.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise IllConditionedGramError("Gram contains non-finite entries", theta=theta, hyper=hyper)
    try:
        return cholesky(matrix, lower=True, check_finite=False), 0.0
    except LinAlgError:
        pass

    scale = float(np.mean(np.abs(np.diag(matrix)))) or 1.0
    identity = np.eye(matrix.shape[0])
    relative = JITTER_START
    while relative <= JITTER_CAP * (1.0 + 1e-9):
        jitter = relative * scale
        try:
            factor = cholesky(matrix + jitter * identity, lower=True, check_finite=False)
        except LinAlgError:
            relative *= JITTER_FACTOR
            continue
        logger.debug("Cholesky needed jitter %.1e (relative %.1e)", jitter, relative)
        return factor, jitter
    raise IllConditionedGramError(
        f"Cholesky failed at maximum jitter {JITTER_CAP:.0e}", theta=theta, hyper=hyper
    )


def cholesky_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return cho_solve((factor, True), rhs, check_finite=False)


def cholesky_log_det(factor: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor))))
