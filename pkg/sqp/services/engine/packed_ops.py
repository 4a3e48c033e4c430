"""
Kernels on bit-packed binary activation maps. A PackedFeatureMap is (C, H, W)
with one 64-bit word aligned row per (channel, image row).
"""
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sqp.exceptions.sqp_exceptions import (
    InvalidInputException,
    ShapeMismatchException,
)
from sqp.models.enums import ConvBackend
from sqp.models.tensors import WORD_DTYPE, BitTensor, PackedFeatureMap, pad_mask, words_per_row
from sqp.services.bitmap.bitmap_ops import pack_bool, popcount_words, unpack_bool

KERNEL_SIZE = 3

# bit k of the nibble is the OR of bits 2k and 2k+1 of the byte
_PAIR_OR_NIBBLE = np.array(
    [
        sum((((value >> (2 * k)) | (value >> (2 * k + 1))) & 1) << k for k in range(4))
        for value in range(256)
    ],
    dtype=np.uint8,
)


def pack_feature_map(bits: np.ndarray) -> PackedFeatureMap:
    """(C, H, W) booleans to a packed map."""
    bits = np.asarray(bits, dtype=bool)
    if bits.ndim != 3:
        raise ShapeMismatchException(expected="(C, H, W)", actual=bits.shape, what="feature map")
    return PackedFeatureMap(bits=pack_bool(bits))


def unpack_feature_map(fmap: PackedFeatureMap) -> np.ndarray:
    return unpack_bool(fmap.bits)


def threshold_pack(pre: np.ndarray, threshold: Optional[np.ndarray] = None) -> PackedFeatureMap:
    """
    Bit set where pre >= threshold per channel (0 when omitted). Integer
    accumulators are compared against integer thresholds directly.
    """
    pre = np.asarray(pre)
    if pre.dtype.kind == "f" and not np.all(np.isfinite(pre)):
        raise InvalidInputException(error_description="Preactivations must be finite")
    if threshold is None:
        return pack_feature_map(pre >= 0)
    return pack_feature_map(pre >= np.asarray(threshold)[:, None, None])


def maxpool_or(fmap: PackedFeatureMap) -> PackedFeatureMap:
    """2x2 max pooling of a binary map as word-parallel OR, floor semantics."""
    channels, height, width = fmap.channels, fmap.height, fmap.width
    out_height, out_width = height // 2, width // 2
    in_words = words_per_row(width)
    out_words = words_per_row(out_width)
    if out_height == 0 or out_width == 0:
        return PackedFeatureMap(
            bits=BitTensor(
                shape=(channels, out_height, out_width),
                words=np.zeros((channels * out_height, out_words), WORD_DTYPE),
            )
        )

    rows = fmap.bits.words.reshape(channels, height, in_words)[:, : 2 * out_height]
    vertical = rows.reshape(channels, out_height, 2, in_words)
    vertical = np.ascontiguousarray(vertical[:, :, 0] | vertical[:, :, 1])

    in_bytes = vertical.view(np.uint8)
    nibbles = _PAIR_OR_NIBBLE[in_bytes]
    compact = nibbles[..., 0::2] | (nibbles[..., 1::2] << 4)
    out = np.zeros((channels, out_height, out_words * 8), dtype=np.uint8)
    keep = min(compact.shape[-1], out.shape[-1])
    out[..., :keep] = compact[..., :keep]
    words = out.view(WORD_DTYPE).reshape(channels * out_height, out_words)
    words &= ~pad_mask(out_width)
    return PackedFeatureMap(bits=BitTensor(shape=(channels, out_height, out_width), words=words))


def global_avg(fmap: PackedFeatureMap) -> np.ndarray:
    """Per-channel popcount / (H * W)."""
    area = fmap.height * fmap.width
    counts = popcount_words(fmap.bits.words).reshape(fmap.channels, -1).sum(axis=1)
    if area == 0:
        return np.zeros(fmap.channels, dtype=np.float64)
    return counts / float(area)


def _padded_mask(fmap: PackedFeatureMap) -> np.ndarray:
    return np.pad(unpack_feature_map(fmap), ((0, 0), (1, 1), (1, 1)))


def masked_conv_sum(fmap: PackedFeatureMap, kernel: np.ndarray) -> np.ndarray:
    """Adds kernel taps wherever the input bit is set; no multiplications."""
    out_channels, in_channels = kernel.shape[:2]
    height, width = fmap.height, fmap.width
    padded = _padded_mask(fmap)
    dtype = np.float64 if kernel.dtype.kind == "f" else np.int64
    taps = kernel.astype(dtype)
    acc = np.zeros((out_channels, height, width), dtype=dtype)
    for channel in range(in_channels):
        for i in range(KERNEL_SIZE):
            for j in range(KERNEL_SIZE):
                mask = padded[channel, i : i + height, j : j + width]
                np.add(acc, taps[:, channel, i, j][:, None, None], out=acc, where=mask[None])
    return acc


def bitplane_conv_sum(fmap: PackedFeatureMap, kernel: np.ndarray) -> np.ndarray:
    """
    int8 kernels split into two's complement bit-planes; each plane contributes
    popcount(patch AND plane) shifted by its weight, the sign plane negatively.
    """
    if kernel.dtype != np.int8:
        raise InvalidInputException(
            error_description=f"Bit-plane convolution needs int8 kernels, got {kernel.dtype}"
        )
    out_channels = kernel.shape[0]
    height, width = fmap.height, fmap.width
    windows = sliding_window_view(_padded_mask(fmap), (KERNEL_SIZE, KERNEL_SIZE), axis=(1, 2))
    patches = windows.transpose(1, 2, 0, 3, 4).reshape(height * width, -1)
    patch_words = pack_bool(patches).words

    planes = kernel.reshape(out_channels, -1).view(np.uint8)
    acc = np.zeros((height * width, out_channels), dtype=np.int64)
    for bit in range(8):
        plane_words = pack_bool(((planes >> bit) & 1).astype(bool)).words
        counts = popcount_words(patch_words[:, None, :] & plane_words[None, :, :]).sum(axis=-1)
        acc += (-(1 << bit) if bit == 7 else (1 << bit)) * counts
    return acc.T.reshape(out_channels, height, width)


def conv_bam(
    fmap: PackedFeatureMap,
    kernel: np.ndarray,
    bias: Optional[np.ndarray] = None,
    backend: ConvBackend = ConvBackend.MASKED,
) -> np.ndarray:
    """
    Zero-padded 3x3 convolution of a packed binary map. Float kernels give
    float64 sums, int8 kernels exact int64 sums; ``bias`` is added when given.
    """
    if kernel.ndim != 4 or kernel.shape[1] != fmap.channels:
        raise ShapeMismatchException(
            expected=("*", fmap.channels, KERNEL_SIZE, KERNEL_SIZE),
            actual=kernel.shape,
            what="binary conv kernel",
        )
    if backend == ConvBackend.BITPLANE:
        acc = bitplane_conv_sum(fmap, kernel)
    else:
        acc = masked_conv_sum(fmap, kernel)
    if bias is not None:
        acc = acc + np.asarray(bias).astype(acc.dtype)[:, None, None]
    return acc
