import logging
from typing import Optional, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import EmptyInputException, InvalidInputException
from sqp.services.quantization.affine import (
    activation_qparams,
    dequantize_array,
    quantize_array,
)

log = logging.getLogger(__name__)

DEFAULT_BINS = 2048
SEARCH_STEPS = (64, 8, 1)


def _finite_values(batch) -> np.ndarray:
    values = np.asarray(batch, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise InvalidInputException(error_description="Observed values must be finite")
    return values


class HistogramObserver:
    """
    Running histogram over [min, max] with a fixed number of bins. When a batch
    widens the range, existing counts move to the new bin holding their old
    bin center.
    """

    def __init__(self, bins: int = DEFAULT_BINS):
        if bins < 1:
            raise InvalidInputException(error_description=f"bins must be >= 1, got {bins}")
        self.bins = bins
        self.counts = np.zeros(bins, dtype=np.int64)
        self.min: Optional[float] = None
        self.max: Optional[float] = None

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def is_empty(self) -> bool:
        return self.min is None

    def edges(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.bins + 1)

    def centers(self) -> np.ndarray:
        edges = self.edges()
        return (edges[:-1] + edges[1:]) / 2.0

    def _bin_of(self, values: np.ndarray) -> np.ndarray:
        if self.max == self.min:
            return np.zeros(values.shape, dtype=np.int64)
        width = (self.max - self.min) / self.bins
        return np.clip(((values - self.min) / width).astype(np.int64), 0, self.bins - 1)

    def observe(self, batch) -> "HistogramObserver":
        values = _finite_values(batch)
        if values.size == 0:
            return self
        low, high = float(values.min()), float(values.max())
        if self.is_empty:
            self.min, self.max = low, high
        elif low < self.min or high > self.max:
            old_centers = self.centers()
            old_counts = self.counts
            self.min, self.max = min(self.min, low), max(self.max, high)
            self.counts = np.zeros(self.bins, dtype=np.int64)
            np.add.at(self.counts, self._bin_of(old_centers), old_counts)
        np.add.at(self.counts, self._bin_of(values), 1)
        return self


class PerChannelObserver:
    """Running per-channel min and max along `axis`."""

    def __init__(self, axis: int = 0):
        self.axis = axis
        self.min: Optional[np.ndarray] = None
        self.max: Optional[np.ndarray] = None

    def observe(self, batch) -> "PerChannelObserver":
        values = np.moveaxis(np.asarray(batch, dtype=np.float64), self.axis, 0)
        values = _finite_values(values).reshape(values.shape[0], -1)
        low, high = values.min(axis=1), values.max(axis=1)
        if self.min is None:
            self.min, self.max = low, high
        else:
            self.min, self.max = np.minimum(self.min, low), np.maximum(self.max, high)
        return self


def quantization_error(
    centers: np.ndarray, counts: np.ndarray, low: float, high: float
) -> float:
    """Histogram mass weighted squared error of the grid built over [low, high]."""
    qp = activation_qparams(low, high)
    error = centers - dequantize_array(quantize_array(centers, qp), qp)
    return float(np.dot(counts, error * error))


def _candidates(start: int, stop: int, step: int, bins: int):
    lows = range(max(0, start - step * 8), min(bins, start + step * 8) + 1, step)
    for low in lows:
        for high in range(max(low + 1, stop - step * 8), min(bins, stop + step * 8) + 1, step):
            yield low, high


def range_search(observer: HistogramObserver) -> Tuple[float, float]:
    """
    Coarse-to-fine search over sub-ranges of the histogram support, shrinking
    each end in bin-sized steps. Ties go to the wider range; the full observed
    range is always a candidate.
    """
    if observer.is_empty or observer.total == 0:
        raise EmptyInputException(error_description="Observer has seen no data")
    if observer.min == observer.max:
        value = observer.min
        return min(value, 0.0), max(value, 0.0)

    edges = observer.edges()
    centers = observer.centers()
    counts = observer.counts.astype(np.float64)
    bins = observer.bins

    def score(low: int, high: int):
        error = quantization_error(centers, counts, edges[low], edges[high])
        return error, -(high - low)

    best = (0, bins)
    best_score = score(*best)
    coarse = SEARCH_STEPS[0]
    first_pass = [
        (low, high)
        for low in range(0, bins, coarse)
        for high in list(range(low + coarse, bins, coarse)) + [bins]
    ]
    for step in SEARCH_STEPS:
        candidates = first_pass if step == coarse else _candidates(*best, step, bins)
        for low, high in list(candidates):
            candidate_score = score(low, high)
            if candidate_score < best_score:
                best, best_score = (low, high), candidate_score
    log.debug(
        "range_search kept bins [%d, %d) of %d, error %.6g",
        best[0],
        best[1],
        bins,
        best_score[0],
    )
    return float(edges[best[0]]), float(edges[best[1]])
