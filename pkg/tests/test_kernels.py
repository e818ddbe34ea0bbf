import numpy as np
import pytest

from megpr.domain.exceptions import DomainError, UnsupportedOrderError
from megpr.domain.kernels import MAX_ORDER, NoiseSpec, SEKernel, se_eval_deriv, se_eval_hyper_grad


def _fd_mixed(kernel, t, t2, h=1e-2):
    # ∂²_t ∂²_t' via a 3-point second-difference stencil on each argument.
    weights = {-1: 1.0, 0: -2.0, 1: 1.0}
    total = 0.0
    for i, wi in weights.items():
        for j, wj in weights.items():
            total += wi * wj * kernel(t + i * h, t2 + j * h)
    return total / h**4


def test_diagonal_value_is_amplitude_squared():
    assert se_eval_deriv(SEKernel(1.0, 1.0), 0, 0, 0.0, 0.0) == pytest.approx(1.0)
    assert se_eval_deriv(SEKernel(2.0, 0.3), 0, 0, 1.5, 1.5) == pytest.approx(4.0)


def test_odd_derivative_vanishes_at_zero_separation():
    assert se_eval_deriv(SEKernel(1.0, 1.0), 1, 0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_first_derivatives_match_closed_form():
    kernel = SEKernel(1.3, 0.7)
    t, t2 = 0.4, -0.2
    k = kernel(t, t2)
    d = t - t2
    assert se_eval_deriv(kernel, 1, 0, t, t2) == pytest.approx(-d / 0.7**2 * k)
    assert se_eval_deriv(kernel, 0, 1, t, t2) == pytest.approx(d / 0.7**2 * k)
    assert se_eval_deriv(kernel, 1, 1, t, t2) == pytest.approx((1 / 0.7**2 - d**2 / 0.7**4) * k)


def test_fourth_mixed_derivative_matches_finite_differences():
    kernel = SEKernel(1.0, 1.0)
    exact = se_eval_deriv(kernel, 2, 2, 0.3, -0.4)
    assert _fd_mixed(kernel, 0.3, -0.4) == pytest.approx(exact, rel=1e-3)


def test_broadcasts_over_arrays():
    kernel = SEKernel(1.0, 0.5)
    t = np.linspace(0, 1, 4)
    values = se_eval_deriv(kernel, 1, 2, t[:, None], t[None, :])
    assert values.shape == (4, 4)
    assert values[1, 2] == pytest.approx(se_eval_deriv(kernel, 1, 2, t[1], t[2]))


def test_order_above_maximum_is_rejected():
    with pytest.raises(UnsupportedOrderError) as excinfo:
        se_eval_deriv(SEKernel(1.0, 1.0), MAX_ORDER + 1, 0, 0.0, 0.0)
    assert excinfo.value.maximum == MAX_ORDER


def test_non_finite_input_is_rejected():
    with pytest.raises(DomainError):
        se_eval_deriv(SEKernel(1.0, 1.0), 0, 0, np.nan, 0.0)


@pytest.mark.parametrize("amplitude, length_scale", [(0.0, 1.0), (1.0, -1.0), (np.inf, 1.0)])
def test_kernel_rejects_invalid_hyperparameters(amplitude, length_scale):
    with pytest.raises(DomainError):
        SEKernel(amplitude, length_scale)


def test_noise_spec_requires_positive_levels():
    with pytest.raises(DomainError):
        NoiseSpec((0.1, 0.0))
    assert NoiseSpec((0.1,)).constraint_reg == pytest.approx(1e-4)


def test_hyper_grad_on_diagonal():
    value, d_amp, d_len = se_eval_hyper_grad(SEKernel(2.0, 1.0), 0, 0, 0.5, 0.5)
    assert value == pytest.approx(4.0)
    assert d_amp == pytest.approx(4.0)
    assert d_len == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize(
    "amplitude, length_scale, m, n, t, t2",
    [(1.0, 0.5, 0, 0, 0.0, 1.0), (1.0, 1.0, 1, 1, 0.0, 0.7), (0.8, 1.7, 2, 1, 0.2, -0.9)],
)
def test_hyper_grad_matches_finite_differences(amplitude, length_scale, m, n, t, t2):
    h = 1e-5
    value, d_amp, d_len = se_eval_hyper_grad(SEKernel(amplitude, length_scale), m, n, t, t2)
    assert value == pytest.approx(se_eval_deriv(SEKernel(amplitude, length_scale), m, n, t, t2))

    def at(a, l):
        return se_eval_deriv(SEKernel(a, l), m, n, t, t2)

    fd_amp = (at(amplitude + h, length_scale) - at(amplitude - h, length_scale)) / (2 * h)
    fd_len = (at(amplitude, length_scale + h) - at(amplitude, length_scale - h)) / (2 * h)
    assert d_amp == pytest.approx(fd_amp, rel=1e-5, abs=1e-9)
    assert d_len == pytest.approx(fd_len, rel=1e-5, abs=1e-9)


def _random_kernel(rng):
    return SEKernel(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))


@pytest.mark.parametrize("m, n", [(m, n) for m in range(3) for n in range(3)])
def test_derivatives_match_central_differences_at_random_points(m, n):
    rng = np.random.default_rng(100 + 3 * m + n)
    h = 1e-5
    for _ in range(200):
        kernel = _random_kernel(rng)
        t, t2 = rng.uniform(-3.0, 3.0, size=2)
        exact = se_eval_deriv(kernel, m, n, t, t2)
        if n > 0:
            fd = (se_eval_deriv(kernel, m, n - 1, t, t2 + h) - se_eval_deriv(kernel, m, n - 1, t, t2 - h)) / (2 * h)
        elif m > 0:
            fd = (se_eval_deriv(kernel, m - 1, n, t + h, t2) - se_eval_deriv(kernel, m - 1, n, t - h, t2)) / (2 * h)
        else:
            fd = kernel.amplitude**2 * np.exp(-((t - t2) ** 2) / (2 * kernel.length_scale**2))
        scale = kernel.amplitude**2 / kernel.length_scale ** (m + n)
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-8 * scale)


@pytest.mark.parametrize("m, n", [(m, n) for m in range(MAX_ORDER + 1) for n in range(MAX_ORDER + 1)])
def test_swapping_orders_and_arguments_is_symmetric(m, n):
    rng = np.random.default_rng(7)
    kernel = SEKernel(1.3, 0.8)
    t, t2 = rng.uniform(-4.0, 4.0, size=(2, 50))
    np.testing.assert_allclose(
        se_eval_deriv(kernel, m, n, t, t2), se_eval_deriv(kernel, n, m, t2, t), rtol=1e-12, atol=1e-9
    )


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_derivative_gram_is_positive_semidefinite(seed):
    rng = np.random.default_rng(seed)
    kernel = _random_kernel(rng)
    orders = rng.integers(0, 3, size=25)
    times = rng.uniform(0.0, 5.0, size=25)
    gram = np.array(
        [[se_eval_deriv(kernel, a, b, ta, tb) for b, tb in zip(orders, times)] for a, ta in zip(orders, times)]
    )
    np.testing.assert_allclose(gram, gram.T, atol=1e-9)
    assert np.linalg.eigvalsh(gram).min() >= -1e-8 * np.trace(gram)
