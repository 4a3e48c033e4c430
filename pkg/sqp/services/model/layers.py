"""
Numpy kernels for the layer stack. Feature maps are NHWC; conv kernels are
(out, in, 3, 3) and dense weights (out, in). The dtype of every result follows
the inputs, so the same code runs in float32 and float64.
"""
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sqp.exceptions.sqp_exceptions import InvalidInputException
from sqp.models.enums import ActivationKind
from sqp.models.model_graph import KERNEL_SIZE

PAD = KERNEL_SIZE // 2


def heaviside(x):
    """H(x) = 1 for x >= 0, else 0."""
    x = np.asarray(x)
    return (x >= 0).astype(x.dtype if x.dtype.kind == "f" else np.float32)


def relaxed(x, beta: float):
    """Fast sigmoid x / (1 + beta*|x|); its sign agrees with heaviside."""
    if beta <= 0:
        raise InvalidInputException(error_description=f"beta must be > 0, got {beta}")
    x = np.asarray(x)
    return x / (1.0 + beta * np.abs(x))


def superspike_deriv(x, beta: float):
    """1 / (beta*|x| + 1)^2, the derivative of relaxed() and the Heaviside surrogate."""
    return 1.0 / (beta * np.abs(np.asarray(x)) + 1.0) ** 2


def activation_forward(kind: ActivationKind, pre: np.ndarray, beta: float) -> np.ndarray:
    if kind == ActivationKind.RELU:
        return np.maximum(pre, 0)
    if kind == ActivationKind.HEAVISIDE:
        return heaviside(pre)
    if kind == ActivationKind.RELAXED:
        return relaxed(pre, beta)
    return pre


def activation_backward(
    kind: ActivationKind, pre: np.ndarray, grad: np.ndarray, beta: float
) -> np.ndarray:
    """Heaviside layers use the fast-sigmoid surrogate at the preactivation."""
    if kind == ActivationKind.RELU:
        return grad * (pre > 0)
    if kind in (ActivationKind.HEAVISIDE, ActivationKind.RELAXED):
        return grad * superspike_deriv(pre, beta).astype(grad.dtype)
    return grad


def binarize_weights(weights: np.ndarray) -> np.ndarray:
    """Q(w) = 1 for w >= 0, else -1."""
    return np.where(weights >= 0, 1, -1).astype(weights.dtype)


def im2col(x: np.ndarray) -> np.ndarray:
    """(N, H, W, C) -> (N, H, W, C*9) patches of the zero-padded input."""
    padded = np.pad(x, ((0, 0), (PAD, PAD), (PAD, PAD), (0, 0)))
    windows = sliding_window_view(padded, (KERNEL_SIZE, KERNEL_SIZE), axis=(1, 2))
    n, h, w, c = x.shape
    return windows.reshape(n, h, w, c * KERNEL_SIZE * KERNEL_SIZE)


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    out_channels = kernel.shape[0]
    return im2col(x) @ kernel.reshape(out_channels, -1).T + bias


def conv2d_backward(
    x: np.ndarray, kernel: np.ndarray, grad: np.ndarray, need_input_grad: bool = True
):
    """Returns (d_kernel, d_bias, d_input or None); patches are rebuilt from x."""
    out_channels = kernel.shape[0]
    cols = im2col(x)
    d_kernel = np.tensordot(grad, cols, axes=([0, 1, 2], [0, 1, 2])).reshape(kernel.shape)
    d_bias = grad.sum(axis=(0, 1, 2))
    if not need_input_grad:
        return d_kernel, d_bias, None

    n, h, w, c = x.shape
    d_cols = (grad @ kernel.reshape(out_channels, -1)).reshape(
        n, h, w, c, KERNEL_SIZE, KERNEL_SIZE
    )
    d_padded = np.zeros((n, h + 2 * PAD, w + 2 * PAD, c), dtype=grad.dtype)
    for i in range(KERNEL_SIZE):
        for j in range(KERNEL_SIZE):
            d_padded[:, i : i + h, j : j + w, :] += d_cols[..., i, j]
    return d_kernel, d_bias, d_padded[:, PAD : PAD + h, PAD : PAD + w, :]


def _pool_windows(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    cropped = x[:, : 2 * ho, : 2 * wo, :]
    return (
        cropped.reshape(n, ho, 2, wo, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, ho, wo, c, 4)
    )


def maxpool2x2_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Floor semantics: a trailing odd row or column is dropped."""
    windows = _pool_windows(x)
    argmax = windows.argmax(axis=-1)
    return np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0], argmax


def maxpool2x2_backward(
    grad: np.ndarray, argmax: np.ndarray, input_shape: Tuple[int, ...]
) -> np.ndarray:
    n, ho, wo, c = grad.shape
    windows = np.zeros((n, ho, wo, c, 4), dtype=grad.dtype)
    np.put_along_axis(windows, argmax[..., None], grad[..., None], axis=-1)
    d_input = np.zeros(input_shape, dtype=grad.dtype)
    d_input[:, : 2 * ho, : 2 * wo, :] = (
        windows.reshape(n, ho, wo, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, 2 * ho, 2 * wo, c)
    )
    return d_input


def global_max_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    flat = x.reshape(x.shape[0], -1, x.shape[-1])
    argmax = flat.argmax(axis=1)
    return np.take_along_axis(flat, argmax[:, None, :], axis=1)[:, 0, :], argmax


def global_max_backward(
    grad: np.ndarray, argmax: np.ndarray, input_shape: Tuple[int, ...]
) -> np.ndarray:
    n, h, w, c = input_shape
    flat = np.zeros((n, h * w, c), dtype=grad.dtype)
    np.put_along_axis(flat, argmax[:, None, :], grad[:, None, :], axis=1)
    return flat.reshape(input_shape)


def global_avg_forward(x: np.ndarray) -> np.ndarray:
    return x.mean(axis=(1, 2))


def global_avg_backward(grad: np.ndarray, input_shape: Tuple[int, ...]) -> np.ndarray:
    _, h, w, _ = input_shape
    return np.broadcast_to(
        (grad / (h * w))[:, None, None, :], input_shape
    ).copy()


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weight.T + bias


def dense_backward(x: np.ndarray, weight: np.ndarray, grad: np.ndarray):
    return grad.T @ x, grad.sum(axis=0), grad @ weight


def dropout_mask(
    rng: np.random.Generator, shape: Tuple[int, ...], rate: float, dtype
) -> np.ndarray:
    """Inverted dropout: kept units are scaled by 1/(1 - rate)."""
    keep = 1.0 - rate
    return ((rng.random(shape) < keep) / keep).astype(dtype)
