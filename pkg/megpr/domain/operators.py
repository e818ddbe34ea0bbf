"""Linear differential operators with parameter- and time-dependent coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from .exceptions import DomainError, UnsupportedOrderError
from .kernels import MAX_ORDER, SEKernel, se_eval_deriv, se_eval_hyper_grad

Evaluator = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

DIVISION_GUARD = 1e-12


class CoefficientKind(str, Enum):
    CONSTANT = "constant"
    PARAMETRIC = "parametric"
    PIECEWISE = "piecewise"


_KIND_RANK = {CoefficientKind.CONSTANT: 0, CoefficientKind.PARAMETRIC: 1, CoefficientKind.PIECEWISE: 2}


def _combine_kind(*kinds: CoefficientKind) -> CoefficientKind:
    return max(kinds, key=_KIND_RANK.__getitem__)


@dataclass(frozen=True, slots=True)
class Coefficient:
    """A scalar coefficient c(t; Θ) evaluated with its parameter gradient.

    The evaluator maps a 1-D time array and a parameter vector to
    ``(value[n], grad[n, p])``.
    """

    evaluator: Evaluator
    kind: CoefficientKind = CoefficientKind.CONSTANT
    constant_value: float | None = None

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        value = float(value)

        def evaluate(t: np.ndarray, theta: np.ndarray):
            return np.full(t.shape, value), np.zeros((t.size, theta.size))

        return cls(evaluate, CoefficientKind.CONSTANT, value)

    @classmethod
    def parameter(cls, index: int) -> "Coefficient":
        """The coefficient θ_index."""

        def evaluate(t: np.ndarray, theta: np.ndarray):
            grad = np.zeros((t.size, theta.size))
            grad[:, index] = 1.0
            return np.full(t.shape, theta[index]), grad

        return cls(evaluate, CoefficientKind.PARAMETRIC)

    @property
    def is_zero(self) -> bool:
        return self.constant_value == 0.0

    @property
    def is_one(self) -> bool:
        return self.constant_value == 1.0

    def evaluate(self, t, theta) -> tuple[np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        value, grad = self.evaluator(t, theta)
        return np.asarray(value, dtype=float), np.asarray(grad, dtype=float)

    def __call__(self, t, theta) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluate(t, theta)

    def __neg__(self) -> "Coefficient":
        if self.constant_value is not None:
            return Coefficient.constant(-self.constant_value)
        evaluator = self.evaluator

        def evaluate(t, theta):
            value, grad = evaluator(t, theta)
            return -value, -grad

        return Coefficient(evaluate, self.kind)

    def __add__(self, other: "Coefficient | float") -> "Coefficient":
        other = _as_coefficient(other)
        if self.constant_value is not None and other.constant_value is not None:
            return Coefficient.constant(self.constant_value + other.constant_value)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        left, right = self.evaluator, other.evaluator

        def evaluate(t, theta):
            value_a, grad_a = left(t, theta)
            value_b, grad_b = right(t, theta)
            return value_a + value_b, grad_a + grad_b

        return Coefficient(evaluate, _combine_kind(self.kind, other.kind))

    __radd__ = __add__

    def __sub__(self, other: "Coefficient | float") -> "Coefficient":
        return self + (-_as_coefficient(other))

    def __rsub__(self, other: "Coefficient | float") -> "Coefficient":
        return _as_coefficient(other) + (-self)

    def __mul__(self, other: "Coefficient | float") -> "Coefficient":
        other = _as_coefficient(other)
        if self.constant_value is not None and other.constant_value is not None:
            return Coefficient.constant(self.constant_value * other.constant_value)
        if self.is_one:
            return other
        if other.is_one:
            return self
        if self.is_zero or other.is_zero:
            return Coefficient.constant(0.0)
        left, right = self.evaluator, other.evaluator

        def evaluate(t, theta):
            value_a, grad_a = left(t, theta)
            value_b, grad_b = right(t, theta)
            return value_a * value_b, grad_a * value_b[:, None] + value_a[:, None] * grad_b

        return Coefficient(evaluate, _combine_kind(self.kind, other.kind))

    __rmul__ = __mul__

    def __truediv__(self, other: "Coefficient | float") -> "Coefficient":
        other = _as_coefficient(other)
        if other.constant_value is not None and abs(other.constant_value) < DIVISION_GUARD:
            raise DomainError("Division by a coefficient that is identically zero")
        if self.constant_value is not None and other.constant_value is not None:
            return Coefficient.constant(self.constant_value / other.constant_value)
        left, right = self.evaluator, other.evaluator

        def evaluate(t, theta):
            value_a, grad_a = left(t, theta)
            value_b, grad_b = right(t, theta)
            if np.any(np.abs(value_b) < DIVISION_GUARD):
                raise DomainError("Coefficient denominator is numerically zero")
            quotient = value_a / value_b
            grad = (grad_a - quotient[:, None] * grad_b) / value_b[:, None]
            return quotient, grad

        return Coefficient(evaluate, _combine_kind(self.kind, other.kind))

    def __rtruediv__(self, other: "Coefficient | float") -> "Coefficient":
        return _as_coefficient(other) / self


def _as_coefficient(value: "Coefficient | float") -> Coefficient:
    if isinstance(value, Coefficient):
        return value
    return Coefficient.constant(float(value))


ZERO = Coefficient.constant(0.0)
ONE = Coefficient.constant(1.0)


@dataclass(frozen=True, slots=True)
class DiffOperator:
    """x = Σ c_m(t; Θ) D^m u + offset(t; Θ), with distinct orders m."""

    terms: tuple[tuple[int, Coefficient], ...]
    offset: Coefficient = field(default=ZERO)

    def __post_init__(self) -> None:
        merged: dict[int, Coefficient] = {}
        for order, coeff in self.terms:
            if order < 0 or order > MAX_ORDER:
                raise UnsupportedOrderError(order, MAX_ORDER)
            coeff = _as_coefficient(coeff)
            merged[order] = merged[order] + coeff if order in merged else coeff
        terms = tuple((order, merged[order]) for order in sorted(merged) if not merged[order].is_zero)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "offset", _as_coefficient(self.offset))

    @classmethod
    def identity(cls) -> "DiffOperator":
        return cls(((0, ONE),))

    @classmethod
    def derivative(cls, order: int) -> "DiffOperator":
        return cls(((order, ONE),))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, "Coefficient | float"]], offset=ZERO) -> "DiffOperator":
        return cls(tuple((order, _as_coefficient(coeff)) for order, coeff in terms), _as_coefficient(offset))

    @property
    def max_order(self) -> int:
        return max((order for order, _ in self.terms), default=0)

    @property
    def is_identity(self) -> bool:
        return (
            len(self.terms) == 1
            and self.terms[0][0] == 0
            and self.terms[0][1].is_one
            and self.offset.is_zero
        )

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        return DiffOperator(self.terms + other.terms, self.offset + other.offset)

    def __neg__(self) -> "DiffOperator":
        return self.scaled(-1.0)

    def __sub__(self, other: "DiffOperator") -> "DiffOperator":
        return self + (-other)

    def scaled(self, coeff: "Coefficient | float") -> "DiffOperator":
        coeff = _as_coefficient(coeff)
        return DiffOperator(
            tuple((order, term * coeff) for order, term in self.terms),
            self.offset * coeff,
        )

    def divided(self, coeff: "Coefficient | float") -> "DiffOperator":
        coeff = _as_coefficient(coeff)
        return DiffOperator(
            tuple((order, term / coeff) for order, term in self.terms),
            self.offset / coeff,
        )

    def shifted(self, offset: "Coefficient | float") -> "DiffOperator":
        return DiffOperator(self.terms, self.offset + _as_coefficient(offset))

    def differentiated(self, times: int = 1) -> "DiffOperator":
        """D^times applied to the operator; coefficients are locally constant."""
        if times == 0:
            return self
        return DiffOperator(tuple((order + times, coeff) for order, coeff in self.terms))

    def describe(self, theta) -> list[tuple[int, float]]:
        """Terms evaluated at t=0, for logs and quick inspection."""
        return [(order, float(coeff(0.0, theta)[0][0])) for order, coeff in self.terms]


def _coefficient_table(op: DiffOperator, t: np.ndarray, theta: np.ndarray):
    return [(order, *coeff.evaluate(t, theta)) for order, coeff in op.terms]


def _op_cov_core(
    a: DiffOperator,
    b: DiffOperator,
    kernel: SEKernel,
    t,
    t2,
    theta,
    *,
    with_grad: bool,
    outer: bool,
):
    t1 = np.atleast_1d(np.asarray(t, dtype=float))
    t2v = np.atleast_1d(np.asarray(t2, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = theta.size
    if outer:
        grid_a, grid_b = t1[:, None], t2v[None, :]
        shape = (t1.size, t2v.size)
    else:
        if t1.shape != t2v.shape:
            raise DomainError("Elementwise operator covariance needs equal-length time arrays")
        grid_a, grid_b = t1, t2v
        shape = t1.shape

    def left_view(values):
        return values[:, None] if outer else values

    def right_view(values):
        return values[None, :] if outer else values

    value = np.zeros(shape)
    grad_theta = np.zeros(shape + (p,)) if with_grad else None
    grad_hyper = np.zeros(shape + (2,)) if with_grad else None
    right_terms = _coefficient_table(b, t2v, theta)
    for m, value_a, grad_a in _coefficient_table(a, t1, theta):
        ca = left_view(value_a)
        for n, value_b, grad_b in right_terms:
            cb = right_view(value_b)
            weight = ca * cb
            if with_grad:
                k, dk_amp, dk_len = se_eval_hyper_grad(kernel, m, n, grid_a, grid_b)
                k = np.broadcast_to(k, shape)
                grad_hyper[..., 0] += weight * dk_amp
                grad_hyper[..., 1] += weight * dk_len
                ga = grad_a[:, None, :] if outer else grad_a
                gb = grad_b[None, :, :] if outer else grad_b
                grad_theta += (ga * cb[..., None] + ca[..., None] * gb) * k[..., None]
            else:
                k = se_eval_deriv(kernel, m, n, grid_a, grid_b)
            value += weight * k
    return value, grad_theta, grad_hyper


def _scalar_inputs(t, t2) -> bool:
    return np.ndim(t) == 0 and np.ndim(t2) == 0


def op_cov(a: DiffOperator, b: DiffOperator, kernel: SEKernel, t, t2, theta):
    """Covariance of (a u)(t) and (b u)(t2).

    Scalars give a float; arrays give the ``len(t) × len(t2)`` block.
    """
    value, _, _ = _op_cov_core(a, b, kernel, t, t2, theta, with_grad=False, outer=True)
    return float(value[0, 0]) if _scalar_inputs(t, t2) else value


def op_cov_grad(a: DiffOperator, b: DiffOperator, kernel: SEKernel, t, t2, theta):
    """Return (value, grad_theta, grad_hyper) with hyper order (amplitude, length_scale)."""
    value, grad_theta, grad_hyper = _op_cov_core(a, b, kernel, t, t2, theta, with_grad=True, outer=True)
    if _scalar_inputs(t, t2):
        return float(value[0, 0]), grad_theta[0, 0], grad_hyper[0, 0]
    return value, grad_theta, grad_hyper


def op_cov_diag(a: DiffOperator, b: DiffOperator, kernel: SEKernel, t, theta) -> np.ndarray:
    """Elementwise covariance of (a u)(t_i) and (b u)(t_i)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    value, _, _ = _op_cov_core(a, b, kernel, t, t, theta, with_grad=False, outer=False)
    return value


def op_offset(a: DiffOperator, t, theta):
    value, _ = a.offset.evaluate(t, theta)
    return float(value[0]) if np.ndim(t) == 0 else value


def op_offset_grad(a: DiffOperator, t, theta) -> tuple[np.ndarray, np.ndarray]:
    return a.offset.evaluate(t, theta)
