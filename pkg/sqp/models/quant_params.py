import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

SIGNED_QMIN = -128
SIGNED_QMAX = 127
UNSIGNED_QMIN = 0
UNSIGNED_QMAX = 255


class QuantParams(BaseModel):
    """
    Affine quantization parameters, x ~ scale * (q - zero_point).

    ``axis`` is None for per-tensor parameters (one scale/zero point) and the
    channel axis for per-channel parameters.
    """

    model_config = ConfigDict(frozen=True)

    scale: List[float]
    zero_point: List[int]
    qmin: int
    qmax: int
    axis: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "QuantParams":
        if len(self.scale) == 0 or len(self.scale) != len(self.zero_point):
            raise ValueError("scale and zero_point must be non-empty and equally long")
        if self.qmin >= self.qmax:
            raise ValueError(f"qmin {self.qmin} must be below qmax {self.qmax}")
        for scale in self.scale:
            if not math.isfinite(scale) or scale <= 0:
                raise ValueError(f"scale must be positive and finite, got {scale}")
        for zero_point in self.zero_point:
            if not self.qmin <= zero_point <= self.qmax:
                raise ValueError(
                    f"zero_point {zero_point} outside [{self.qmin}, {self.qmax}]"
                )
        if self.axis is None and len(self.scale) != 1:
            raise ValueError("per-tensor parameters carry exactly one scale")
        return self

    @property
    def is_signed(self) -> bool:
        return self.qmin < 0

    @property
    def storage_dtype(self) -> type:
        return np.int8 if self.is_signed else np.uint8

    def broadcast_scale(self, ndim: int) -> np.ndarray:
        return self._broadcast(np.asarray(self.scale, dtype=np.float64), ndim)

    def broadcast_zero_point(self, ndim: int) -> np.ndarray:
        return self._broadcast(np.asarray(self.zero_point, dtype=np.int64), ndim)

    def _broadcast(self, values: np.ndarray, ndim: int) -> np.ndarray:
        if self.axis is None:
            return values.reshape(())
        shape = [1] * ndim
        shape[self.axis] = len(values)
        return values.reshape(shape)


class LayerQuantParams(BaseModel):
    """Calibrated parameters of one conv or dense layer."""

    model_config = ConfigDict(frozen=True)

    input: QuantParams
    output: QuantParams
    weight: QuantParams


class QuantTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    layers: Dict[str, LayerQuantParams]

    def __getitem__(self, name: str) -> LayerQuantParams:
        return self.layers[name]

    def missing(self, names) -> List[str]:
        return [name for name in names if name not in self.layers]
