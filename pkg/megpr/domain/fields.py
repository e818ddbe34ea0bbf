"""Autonomous vector fields ẋ = f(x; Θ) with analytic Jacobians."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np


class VectorField(ABC):
    """States are arrays of shape ``(..., dim)``; parameters a 1-D vector."""

    dim: int = 0
    param_names: tuple[str, ...] = ()

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @abstractmethod
    def rhs(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """f(x; Θ), shape ``(..., dim)``."""

    @abstractmethod
    def rhs_theta_grad(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """∂f_i/∂θ_k, shape ``(..., dim, p)``."""

    @abstractmethod
    def jacobian(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """∂f_i/∂x_j, shape ``(..., dim, dim)``."""

    @abstractmethod
    def jacobian_theta_grad(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """∂²f_i/∂x_j∂θ_k, shape ``(..., dim, dim, p)``."""

    def offset(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """c(s) = f(s) − J(s)·s, the constant of the first-order expansion at s."""
        x = np.asarray(x, dtype=float)
        return self.rhs(x, theta) - np.einsum("...ij,...j->...i", self.jacobian(x, theta), x)

    def offset_theta_grad(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.rhs_theta_grad(x, theta) - np.einsum(
            "...ijk,...j->...ik", self.jacobian_theta_grad(x, theta), x
        )

    def second_derivative(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """ẍ = J(x)·f(x) along a trajectory."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...ij,...j->...i", self.jacobian(x, theta), self.rhs(x, theta))


def _stack_last(rows: list) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*rows), axis=-1)


class LinearField(VectorField):
    """Parameter-free linear field f(x) = A x."""

    param_names = ()

    def __init__(self, matrix) -> None:
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("LinearField needs a square matrix")
        self.dim = self.matrix.shape[0]

    def rhs(self, x, theta):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def rhs_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (0,))

    def jacobian(self, x, theta):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape).copy()

    def jacobian_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + self.matrix.shape + (0,))


class LinearChainField(VectorField):
    """Consecutive first-order reactions x1 → x2 → x3 with rates θ1, θ2."""

    dim = 3
    param_names = ("theta1", "theta2")

    @staticmethod
    def rate_matrix(theta) -> np.ndarray:
        theta1, theta2 = theta
        return np.array(
            [
                [-theta1, 0.0, 0.0],
                [theta1, -theta2, 0.0],
                [0.0, theta2, 0.0],
            ]
        )

    def rhs(self, x, theta):
        return np.asarray(x, dtype=float) @ self.rate_matrix(theta).T

    def rhs_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        zero = np.zeros_like(x1)
        d_theta1 = _stack_last([-x1, x1, zero])
        d_theta2 = _stack_last([zero, -x2, x2])
        return np.stack([d_theta1, d_theta2], axis=-1)

    def jacobian(self, x, theta):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.rate_matrix(theta), x.shape[:-1] + (3, 3)).copy()

    def jacobian_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        grad = np.zeros((3, 3, 2))
        grad[0, 0, 0], grad[1, 0, 0] = -1.0, 1.0
        grad[1, 1, 1], grad[2, 1, 1] = -1.0, 1.0
        return np.broadcast_to(grad, x.shape[:-1] + grad.shape).copy()


class VanDerPolField(VectorField):
    """u' = w, w' = θ(1 − u²)w − u."""

    dim = 2
    param_names = ("theta",)

    def rhs(self, x, theta):
        x = np.asarray(x, dtype=float)
        u, w = x[..., 0], x[..., 1]
        (mu,) = theta
        return _stack_last([w, mu * (1.0 - u * u) * w - u])

    def rhs_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        u, w = x[..., 0], x[..., 1]
        return _stack_last([np.zeros_like(u), (1.0 - u * u) * w])[..., None]

    def jacobian(self, x, theta):
        x = np.asarray(x, dtype=float)
        u, w = x[..., 0], x[..., 1]
        (mu,) = theta
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 1] = 1.0
        jac[..., 1, 0] = -2.0 * mu * u * w - 1.0
        jac[..., 1, 1] = mu * (1.0 - u * u)
        return jac

    def jacobian_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        u, w = x[..., 0], x[..., 1]
        grad = np.zeros(x.shape[:-1] + (2, 2, 1))
        grad[..., 1, 0, 0] = -2.0 * u * w
        grad[..., 1, 1, 0] = 1.0 - u * u
        return grad


class FitzHughNagumoField(VectorField):
    """x1' = θ3(x1 − x1³/3 + x2), x2' = −(x1 − θ1 + θ2·x2)/θ3."""

    dim = 2
    param_names = ("theta1", "theta2", "theta3")

    def rhs(self, x, theta):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        theta1, theta2, theta3 = theta
        return _stack_last(
            [
                theta3 * (x1 - x1**3 / 3.0 + x2),
                -(x1 - theta1 + theta2 * x2) / theta3,
            ]
        )

    def rhs_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        theta1, theta2, theta3 = theta
        zero = np.zeros_like(x1)
        first = _stack_last([zero, zero, x1 - x1**3 / 3.0 + x2])
        second = _stack_last(
            [
                np.full_like(x1, 1.0 / theta3),
                -x2 / theta3,
                (x1 - theta1 + theta2 * x2) / theta3**2,
            ]
        )
        return np.stack([first, second], axis=-2)

    def jacobian(self, x, theta):
        x = np.asarray(x, dtype=float)
        x1 = x[..., 0]
        _, theta2, theta3 = theta
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = theta3 * (1.0 - x1 * x1)
        jac[..., 0, 1] = theta3
        jac[..., 1, 0] = -1.0 / theta3
        jac[..., 1, 1] = -theta2 / theta3
        return jac

    def jacobian_theta_grad(self, x, theta):
        x = np.asarray(x, dtype=float)
        x1 = x[..., 0]
        _, theta2, theta3 = theta
        grad = np.zeros(x.shape[:-1] + (2, 2, 3))
        grad[..., 0, 0, 2] = 1.0 - x1 * x1
        grad[..., 0, 1, 2] = 1.0
        grad[..., 1, 0, 2] = 1.0 / theta3**2
        grad[..., 1, 1, 1] = -1.0 / theta3
        grad[..., 1, 1, 2] = theta2 / theta3**2
        return grad
