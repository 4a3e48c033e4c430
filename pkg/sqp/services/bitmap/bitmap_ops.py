import math

import numpy as np

from sqp.exceptions.sqp_exceptions import (
    InvalidInputException,
    NonBinaryElementException,
)
from sqp.models.tensors import (
    WORD_BITS,
    WORD_DTYPE,
    BitTensor,
    TensorF32,
    Window,
    words_per_row,
)

# set bits per byte value
POPCOUNT_TABLE = np.array([bin(value).count("1") for value in range(256)], np.uint8)


def popcount(words: np.ndarray) -> int:
    """Number of set bits in an array of packed words."""
    if words.size == 0:
        return 0
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return int(POPCOUNT_TABLE[as_bytes].sum(dtype=np.int64))


def pack_bool(values: np.ndarray) -> BitTensor:
    """Pack a boolean array; each last-axis row is padded to whole words."""
    values = np.asarray(values, dtype=bool)
    if values.ndim == 0:
        values = values.reshape(1)
    shape = tuple(values.shape)
    n_rows, row_length = math.prod(shape[:-1]), shape[-1]
    n_words = words_per_row(row_length)
    if n_rows == 0 or n_words == 0:
        return BitTensor(shape=shape, words=np.zeros((n_rows, n_words), WORD_DTYPE))
    padded = np.zeros((n_rows, n_words * WORD_BITS), dtype=bool)
    padded[:, :row_length] = values.reshape(n_rows, row_length)
    packed = np.packbits(padded, axis=1, bitorder="little")
    return BitTensor(shape=shape, words=packed.view(WORD_DTYPE))


def unpack_bool(src: BitTensor) -> np.ndarray:
    if src.size == 0:
        return np.zeros(src.shape, dtype=bool)
    as_bytes = np.ascontiguousarray(src.words).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, count=src.row_length, bitorder="little")
    return bits.astype(bool).reshape(src.shape)


def pack_bitmap(src: TensorF32) -> BitTensor:
    data = src.data
    flat = data.reshape(-1)
    offending = np.flatnonzero((flat != 0.0) & (flat != 1.0))
    if offending.size:
        index = int(offending[0])
        raise NonBinaryElementException(index=index, value=float(flat[index]))
    return pack_bool(data == 1.0)


def unpack_bitmap(src: BitTensor) -> TensorF32:
    return TensorF32.of(unpack_bool(src).astype(np.float32))


def column_mask(row_length: int, col_start: int, col_stop: int) -> np.ndarray:
    selected = np.zeros(words_per_row(row_length) * WORD_BITS, dtype=bool)
    selected[col_start:col_stop] = True
    return np.packbits(selected, bitorder="little").view(WORD_DTYPE)


def popcount_region(src: BitTensor, window: Window) -> int:
    """
    Set bits inside ``window`` over the (rows, row_length) view of ``src``.
    Pad bits are never counted because the column mask stops at the row length.
    """
    if window.row_stop > src.rows or window.col_stop > src.row_length:
        raise InvalidInputException(
            error_description=f"Window {window.model_dump()} exceeds bounds "
            f"({src.rows}, {src.row_length})"
        )
    if window.is_empty:
        return 0
    selected = src.words[window.row_start : window.row_stop]
    mask = column_mask(src.row_length, window.col_start, window.col_stop)
    return popcount(selected & mask)


def full_window(src: BitTensor) -> Window:
    return Window(row_start=0, row_stop=src.rows, col_start=0, col_stop=src.row_length)


def popcount_words(words: np.ndarray) -> np.ndarray:
    """Set bits of every word, same shape as ``words``."""
    words = np.ascontiguousarray(words, dtype=WORD_DTYPE)
    per_byte = POPCOUNT_TABLE[words.view(np.uint8)]
    return per_byte.reshape(words.shape + (8,)).sum(axis=-1, dtype=np.int64)
