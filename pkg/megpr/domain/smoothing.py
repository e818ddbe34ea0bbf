"""Plain single-output GP regression used for anchors and the baseline curve."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from .exceptions import DegenerateInputError, IllConditionedGramError
from .kernels import SEKernel, se_eval_deriv, se_eval_hyper_grad
from .linalg import cholesky_log_det, cholesky_solve, stable_cholesky

logger = logging.getLogger(__name__)

MIN_POINTS = 3


@dataclass(frozen=True, slots=True)
class SmootherFit:
    """A factorized GP posterior over one observed component."""

    kernel: SEKernel
    noise: float
    mean_level: float
    times: np.ndarray
    factor: np.ndarray
    alpha: np.ndarray
    fallback: bool = False

    def posterior(self, query_times, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and pointwise variance of the order-th derivative."""
        query = np.atleast_1d(np.asarray(query_times, dtype=float))
        cross = se_eval_deriv(self.kernel, order, 0, query[:, None], self.times[None, :])
        mean = cross @ self.alpha
        if order == 0:
            mean = mean + self.mean_level
        projected = solve_triangular(self.factor, cross.T, lower=True, check_finite=False)
        prior = se_eval_deriv(self.kernel, order, order, query, query)
        variance = np.broadcast_to(prior, query.shape) - np.sum(projected**2, axis=0)
        return mean, np.maximum(variance, 0.0)


def heuristic_hyperparameters(times: np.ndarray, values: np.ndarray) -> tuple[SEKernel, float]:
    """Median-gap length scale, data-std amplitude, noise at a tenth of it."""
    gaps = np.diff(np.unique(times))
    length_scale = 2.0 * float(np.median(gaps)) if gaps.size else 1.0
    amplitude = float(np.std(values))
    if amplitude <= 0 or not np.isfinite(amplitude):
        amplitude = max(1e-3, 1e-3 * float(np.max(np.abs(values), initial=0.0)))
    return SEKernel(amplitude, max(length_scale, 1e-6)), 0.1 * amplitude


def _negative_lml(log_params: np.ndarray, times: np.ndarray, values: np.ndarray):
    amplitude, length_scale, noise = np.exp(log_params)
    kernel = SEKernel(amplitude, length_scale)
    value, d_amp, d_len = se_eval_hyper_grad(kernel, 0, 0, times[:, None], times[None, :])
    gram = value + noise**2 * np.eye(times.size)
    try:
        factor, _ = stable_cholesky(gram)
    except IllConditionedGramError:
        return 1e25, np.zeros(3)
    alpha = cholesky_solve(factor, values)
    lml = -0.5 * values @ alpha - 0.5 * cholesky_log_det(factor) - 0.5 * times.size * np.log(2 * np.pi)
    weights = np.outer(alpha, alpha) - cholesky_solve(factor, np.eye(times.size))
    grads = np.array(
        [
            0.5 * np.sum(weights * d_amp) * amplitude,
            0.5 * np.sum(weights * d_len) * length_scale,
            np.trace(weights) * noise**2,
        ]
    )
    return -lml, -grads


def fit_smoother(
    times,
    values,
    *,
    kernel: SEKernel | None = None,
    noise: float | None = None,
    center: bool = True,
) -> SmootherFit:
    """Fit a zero-mean SE-kernel GP to (times, values).

    Missing hyperparameters are chosen by maximizing the marginal
    likelihood with L-BFGS-B; a failed fit falls back to the heuristic.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < MIN_POINTS:
        raise DegenerateInputError(f"GP smoothing needs at least {MIN_POINTS} points, got {times.size}")
    mean_level = float(np.mean(values)) if center else 0.0
    residuals = values - mean_level
    fallback = False

    if kernel is None or noise is None:
        start_kernel, start_noise = heuristic_hyperparameters(times, values)
        kernel, noise, fallback = _optimize_hyperparameters(times, residuals, start_kernel, start_noise)

    gram = se_eval_deriv(kernel, 0, 0, times[:, None], times[None, :]) + noise**2 * np.eye(times.size)
    factor, _ = stable_cholesky(gram, hyper=(kernel.amplitude, kernel.length_scale, noise))
    alpha = cholesky_solve(factor, residuals)
    return SmootherFit(kernel, float(noise), mean_level, times, factor, alpha, fallback)


def _optimize_hyperparameters(
    times: np.ndarray, residuals: np.ndarray, start_kernel: SEKernel, start_noise: float
) -> tuple[SEKernel, float, bool]:
    scale = start_kernel.amplitude
    span = float(np.ptp(times)) or 1.0
    start = np.log([scale, start_kernel.length_scale, start_noise])
    bounds = [
        (np.log(1e-3 * scale), np.log(1e3 * scale)),
        (np.log(1e-3 * span), np.log(10.0 * span)),
        (np.log(1e-6 * scale), np.log(10.0 * scale)),
    ]
    start = np.clip(start, [low for low, _ in bounds], [high for _, high in bounds])
    try:
        result = minimize(
            _negative_lml,
            start,
            args=(times, residuals),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
        )
    except (ValueError, FloatingPointError) as exc:
        logger.warning("GP smoother fit raised %s; using heuristic hyperparameters", exc)
        return start_kernel, start_noise, True
    if not np.isfinite(result.fun) or not np.all(np.isfinite(result.x)) or result.fun >= 1e25:
        logger.warning("GP smoother fit diverged; using heuristic hyperparameters")
        return start_kernel, start_noise, True
    if not result.success:
        logger.debug("GP smoother stopped early: %s", result.message)
    amplitude, length_scale, noise = np.exp(result.x)
    return SEKernel(float(amplitude), float(length_scale)), float(noise), False
