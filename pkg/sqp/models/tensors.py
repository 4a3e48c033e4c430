import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from sqp.models.quant_params import QuantParams

WORD_BITS = 64
WORD_DTYPE = np.dtype("<u8")


def words_per_row(row_length: int) -> int:
    return -(-row_length // WORD_BITS)


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class TensorF32(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _as_float32(cls, value) -> np.ndarray:
        array = np.array(value, dtype=np.float32, order="C")
        if not np.all(np.isfinite(array)):
            raise ValueError("TensorF32 values must be finite")
        return _read_only(array)

    @classmethod
    def of(cls, array) -> "TensorF32":
        return cls(data=array)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)


class TensorI8(BaseModel):
    """
    Affine-quantized tensor. Signed parameters store int8, unsigned (activation)
    parameters store uint8.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    qparams: QuantParams

    @model_validator(mode="after")
    def _check(self) -> "TensorI8":
        if self.data.dtype != self.qparams.storage_dtype:
            raise ValueError(
                f"dtype {self.data.dtype} does not match {self.qparams.storage_dtype}"
            )
        if self.data.size and (
            int(self.data.min()) < self.qparams.qmin
            or int(self.data.max()) > self.qparams.qmax
        ):
            raise ValueError("quantized values outside [qmin, qmax]")
        if self.qparams.axis is not None and (
            self.data.ndim <= self.qparams.axis
            or self.data.shape[self.qparams.axis] != len(self.qparams.scale)
        ):
            raise ValueError("per-channel parameters do not match the channel axis")
        _read_only(self.data)
        return self

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)


class BitTensor(BaseModel):
    """
    One bit per logical element. The last dimension is a row; every row starts on
    a fresh little-endian 64-bit word and bit i of a row is element i. Bits past
    the row length are pad bits and are always 0.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    shape: Tuple[int, ...]
    words: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "BitTensor":
        if len(self.shape) == 0 or any(dim < 0 for dim in self.shape):
            raise ValueError(f"invalid BitTensor shape {self.shape}")
        expected = (self.rows, words_per_row(self.row_length))
        if self.words.dtype != WORD_DTYPE or self.words.shape != expected:
            raise ValueError(
                f"words must be {WORD_DTYPE} of shape {expected}, got "
                f"{self.words.dtype} {self.words.shape}"
            )
        if np.any(self.words & pad_mask(self.row_length)):
            raise ValueError("pad bits must be zero")
        _read_only(self.words)
        return self

    @property
    def row_length(self) -> int:
        return self.shape[-1]

    @property
    def rows(self) -> int:
        return math.prod(self.shape[:-1])

    @property
    def size(self) -> int:
        return math.prod(self.shape)


def pad_mask(row_length: int) -> np.ndarray:
    """Per-word mask that selects the pad bits of a row."""
    n_words = words_per_row(row_length)
    valid = np.zeros(n_words * WORD_BITS, dtype=bool)
    valid[:row_length] = True
    return np.packbits(~valid, bitorder="little").view(WORD_DTYPE)


class Window(BaseModel):
    """Half-open rectangle over the (rows, row_length) view of a BitTensor."""

    model_config = ConfigDict(frozen=True)

    row_start: int
    row_stop: int
    col_start: int
    col_stop: int

    @model_validator(mode="after")
    def _check(self) -> "Window":
        if min(self.row_start, self.col_start) < 0:
            raise ValueError("window start must be non-negative")
        if self.row_stop < self.row_start or self.col_stop < self.col_start:
            raise ValueError("window stop must not precede start")
        return self

    @property
    def is_empty(self) -> bool:
        return self.row_stop == self.row_start or self.col_stop == self.col_start


class PackedFeatureMap(BaseModel):
    """C binary activation maps of H x W, stored as one (C, H, W) BitTensor."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bits: BitTensor

    @field_validator("bits")
    @classmethod
    def _three_dimensional(cls, value: BitTensor) -> BitTensor:
        if len(value.shape) != 3:
            raise ValueError(f"feature maps are (C, H, W), got {value.shape}")
        return value

    @property
    def channels(self) -> int:
        return self.bits.shape[0]

    @property
    def height(self) -> int:
        return self.bits.shape[1]

    @property
    def width(self) -> int:
        return self.bits.shape[2]

    def channel(self, index: int) -> BitTensor:
        start = index * self.height
        return BitTensor(
            shape=(self.height, self.width),
            words=self.bits.words[start : start + self.height],
        )
