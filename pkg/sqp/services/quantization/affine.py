from typing import Sequence, Union

import numpy as np

from sqp.models.quant_params import (
    SIGNED_QMAX,
    SIGNED_QMIN,
    UNSIGNED_QMAX,
    UNSIGNED_QMIN,
    QuantParams,
)
from sqp.models.tensors import TensorF32, TensorI8

# used when a range collapses to a single point
SCALE_FLOOR = float(np.finfo(np.float32).eps)


def quantize_array(x, qp: QuantParams) -> np.ndarray:
    """q = clamp(round_half_even(x / scale) + zero_point, qmin, qmax), as int64."""
    x = np.asarray(x, dtype=np.float64)
    scale = qp.broadcast_scale(x.ndim)
    zero_point = qp.broadcast_zero_point(x.ndim)
    return np.clip(np.rint(x / scale) + zero_point, qp.qmin, qp.qmax).astype(np.int64)


def dequantize_array(q, qp: QuantParams) -> np.ndarray:
    q = np.asarray(q, dtype=np.int64)
    return (q - qp.broadcast_zero_point(q.ndim)) * qp.broadcast_scale(q.ndim)


def quantize(x: Union[TensorF32, np.ndarray], qp: QuantParams) -> TensorI8:
    data = x.data if isinstance(x, TensorF32) else x
    return TensorI8(data=quantize_array(data, qp).astype(qp.storage_dtype), qparams=qp)


def dequantize(q: TensorI8) -> TensorF32:
    return TensorF32(data=dequantize_array(q.data, q.qparams))


def activation_qparams(low: float, high: float) -> QuantParams:
    """Unsigned 8-bit grid over [min(low, 0), max(high, 0)]; 0.0 maps exactly."""
    low, high = min(float(low), 0.0), max(float(high), 0.0)
    scale = (high - low) / (UNSIGNED_QMAX - UNSIGNED_QMIN)
    if scale <= 0.0:
        scale = SCALE_FLOOR
    zero_point = int(np.clip(np.rint(-low / scale), UNSIGNED_QMIN, UNSIGNED_QMAX))
    return QuantParams(
        scale=[scale], zero_point=[zero_point], qmin=UNSIGNED_QMIN, qmax=UNSIGNED_QMAX
    )


def weight_qparams(
    channel_min: Sequence[float], channel_max: Sequence[float], axis: int = 0
) -> QuantParams:
    """
    Signed per-channel grid with zero point 0, scaled so each non-constant
    channel reaches 127 or -128.
    """
    positive = np.maximum(np.asarray(channel_max, dtype=np.float64), 0.0)
    negative = np.minimum(np.asarray(channel_min, dtype=np.float64), 0.0)
    scales = np.maximum(positive / SIGNED_QMAX, -negative / -SIGNED_QMIN)
    scales = np.where(scales > 0, scales, SCALE_FLOOR)
    return QuantParams(
        scale=scales.tolist(),
        zero_point=[0] * len(scales),
        qmin=SIGNED_QMIN,
        qmax=SIGNED_QMAX,
        axis=axis,
    )


def grid_integer(value: float, qp: QuantParams) -> int:
    """Integer that a per-tensor grid assigns to value."""
    return int(quantize_array(np.asarray([value]), qp)[0])
