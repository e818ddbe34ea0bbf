"""Squared-exponential kernel and its closed-form time derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite_e

from .exceptions import DomainError, UnsupportedOrderError

MAX_ORDER = 4


@dataclass(frozen=True, slots=True)
class SEKernel:
    """k(t, t') = amplitude² · exp(−(t − t')² / (2 · length_scale²))."""

    amplitude: float
    length_scale: float

    def __post_init__(self) -> None:
        for name in ("amplitude", "length_scale"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"SEKernel.{name} must be a positive finite number, got {value!r}")

    def __call__(self, t, t2):
        return se_eval_deriv(self, 0, 0, t, t2)


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    """Per-component observation noise plus the preset constraint regularization."""

    obs_noise: tuple[float, ...]
    constraint_reg: float = 1e-4

    def __post_init__(self) -> None:
        values = (*self.obs_noise, self.constraint_reg)
        if any(not np.isfinite(value) or value <= 0 for value in values):
            raise DomainError(f"Noise levels must be positive and finite, got {values!r}")


@lru_cache(maxsize=None)
def _hermite_basis(degree: int) -> np.ndarray:
    basis = np.zeros(degree + 1)
    basis[degree] = 1.0
    return basis


def _check_orders(m: int, n: int) -> None:
    for order in (m, n):
        if order < 0 or order > MAX_ORDER:
            raise UnsupportedOrderError(order, MAX_ORDER)


def _scaled_separation(kernel: SEKernel, t, t2) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(t2))):
        raise DomainError("Kernel inputs must be finite")
    return (t - t2) / kernel.length_scale


def _unwrap(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def se_eval_deriv(kernel: SEKernel, m: int, n: int, t, t2):
    """Return ∂^m_t ∂^n_t' k(t, t'), broadcasting over array inputs.

    With r = (t − t')/l the derivative is a²(−1)^m l^−(m+n) He_(m+n)(r) e^(−r²/2),
    He being the probabilists' Hermite polynomials.
    """
    _check_orders(m, n)
    r = _scaled_separation(kernel, t, t2)
    total = m + n
    envelope = np.exp(-0.5 * r * r)
    scale = kernel.amplitude**2 * (-1.0) ** m * kernel.length_scale ** (-total)
    return _unwrap(scale * hermite_e.hermeval(r, _hermite_basis(total)) * envelope)


def se_eval_hyper_grad(kernel: SEKernel, m: int, n: int, t, t2):
    """Return (value, ∂value/∂amplitude, ∂value/∂length_scale)."""
    _check_orders(m, n)
    r = _scaled_separation(kernel, t, t2)
    total = m + n
    envelope = np.exp(-0.5 * r * r)
    he_n = hermite_e.hermeval(r, _hermite_basis(total))
    he_next = hermite_e.hermeval(r, _hermite_basis(total + 1))
    sign = (-1.0) ** m
    amp2 = kernel.amplitude**2
    value = amp2 * sign * kernel.length_scale ** (-total) * he_n * envelope
    d_amplitude = 2.0 * value / kernel.amplitude
    # d/dl of l^-N He_N(r) g(r) with dr/dl = -r/l, using He_N' = N He_(N-1).
    d_length = amp2 * sign * kernel.length_scale ** (-total - 1) * envelope * (r * he_next - total * he_n)
    return _unwrap(value), _unwrap(d_amplitude), _unwrap(d_length)
