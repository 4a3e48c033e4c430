import itertools

import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import InvalidInputException
from sqp.services.model import layers as ops


def test_heaviside_values():
    np.testing.assert_array_equal(ops.heaviside([-0.5, 0.0, 2.0]), [0.0, 1.0, 1.0])


def test_relaxed_values_and_derivative():
    assert ops.relaxed(1.0, 5.0) == pytest.approx(1.0 / 6.0)
    assert ops.superspike_deriv(1.0, 5.0) == pytest.approx(1.0 / 36.0)
    x = np.linspace(-3, 3, 61)
    np.testing.assert_allclose(ops.relaxed(-x, 2.0), -ops.relaxed(x, 2.0))
    assert np.all(np.abs(ops.relaxed(x, 2.0)) < 1.0)
    h = 1e-6
    numeric = (ops.relaxed(x + h, 2.0) - ops.relaxed(x - h, 2.0)) / (2 * h)
    mask = np.abs(x) > 1e-3
    np.testing.assert_allclose(numeric[mask], ops.superspike_deriv(x, 2.0)[mask], rtol=1e-6)
    with pytest.raises(InvalidInputException):
        ops.relaxed(1.0, 0.0)


def test_relaxed_sign_agrees_with_heaviside():
    x = np.random.default_rng(0).normal(size=1000)
    np.testing.assert_array_equal(ops.relaxed(x, 5.0) >= 0, ops.heaviside(x) == 1.0)


def test_binarize_weights():
    np.testing.assert_array_equal(
        ops.binarize_weights(np.array([-0.2, 0.0, 0.7])), [-1.0, 1.0, 1.0]
    )


def test_maxpool_of_binary_maps_is_logical_or():
    for bits in itertools.product((0.0, 1.0), repeat=4):
        x = np.array(bits).reshape(1, 2, 2, 1)
        pooled, _ = ops.maxpool2x2_forward(x)
        assert pooled[0, 0, 0, 0] == float(any(bits))


def test_maxpool_drops_trailing_odd_row_and_column():
    x = np.arange(5 * 7, dtype=np.float64).reshape(1, 5, 7, 1)
    pooled, argmax = ops.maxpool2x2_forward(x)
    assert pooled.shape == (1, 2, 3, 1)
    assert pooled[0, 1, 2, 0] == x[0, 3, 5, 0]
    grad = ops.maxpool2x2_backward(np.ones_like(pooled), argmax, x.shape)
    assert grad[0, 4].sum() == 0 and grad[0, :, 6].sum() == 0
    assert grad.sum() == pooled.size


def test_conv_backward_matches_adjoint():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 5, 6, 3))
    kernel = rng.normal(size=(4, 3, 3, 3))
    grad = rng.normal(size=(2, 5, 6, 4))
    _, _, d_input = ops.conv2d_backward(x, kernel, grad)
    # <conv(x), g> is linear in x, so its gradient is the adjoint applied to g
    probe = rng.normal(size=x.shape)
    lhs = np.sum(ops.conv2d_forward(probe, kernel, np.zeros(4)) * grad)
    assert np.sum(probe * d_input) == pytest.approx(lhs, rel=1e-10)


def test_global_pools():
    x = np.random.default_rng(3).normal(size=(2, 3, 4, 5))
    np.testing.assert_allclose(ops.global_avg_forward(x), x.mean(axis=(1, 2)))
    values, argmax = ops.global_max_forward(x)
    np.testing.assert_allclose(values, x.max(axis=(1, 2)))
    grad = ops.global_max_backward(np.ones((2, 5)), argmax, x.shape)
    assert grad.sum() == 10
    avg_grad = ops.global_avg_backward(np.ones((2, 5)), x.shape)
    np.testing.assert_allclose(avg_grad, 1.0 / 12)


def test_dropout_mask_keep_rate():
    mask = ops.dropout_mask(np.random.default_rng(0), (200_000,), 0.3, np.float64)
    assert np.mean(mask > 0) == pytest.approx(0.7, abs=0.005)
    assert np.mean(mask) == pytest.approx(1.0, abs=0.01)
