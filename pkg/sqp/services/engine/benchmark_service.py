import logging
import time
from typing import List, Sequence

import numpy as np

from sqp.exceptions.sqp_exceptions import EmptyInputException, InvalidInputException
from sqp.models.reports import BenchmarkSummary
from sqp.services.engine.reference_engine import InferenceEngine

log = logging.getLogger(__name__)

MIN_WARMUP = 3


def median_and_mad(latencies_us: Sequence[float]):
    values = np.asarray(latencies_us, dtype=np.float64)
    median = float(np.median(values))
    return median, float(np.median(np.abs(values - median)))


class BenchmarkService:
    def __init__(self, runs: int = 20, warmup: int = MIN_WARMUP):
        self._runs = runs
        self._warmup = warmup

    def run(
        self,
        engines: Sequence[InferenceEngine],
        inputs: Sequence[np.ndarray],
        runs=None,
        warmup=None,
    ) -> List[BenchmarkSummary]:
        """Per-inference wall-clock latency; inputs are cycled over the runs."""
        runs = self._runs if runs is None else runs
        warmup = self._warmup if warmup is None else warmup
        if runs < 1:
            raise InvalidInputException(error_description=f"runs must be >= 1, got {runs}")
        if warmup < MIN_WARMUP:
            raise InvalidInputException(
                error_description=f"At least {MIN_WARMUP} warmup runs are required"
            )
        if not inputs:
            raise EmptyInputException(error_description="No benchmark inputs")

        summaries = []
        for engine in engines:
            for index in range(warmup):
                engine.infer(inputs[index % len(inputs)])
            log.debug("%s: %d warmup runs done", engine.kind.value, warmup)
            latencies = []
            for index in range(runs):
                started = time.perf_counter_ns()
                engine.infer(inputs[index % len(inputs)])
                latencies.append((time.perf_counter_ns() - started) / 1000.0)
            median, mad = median_and_mad(latencies)
            log.info("%s: median %.1f us, MAD %.1f us", engine.kind.value, median, mad)
            summaries.append(
                BenchmarkSummary(
                    engine=engine.kind,
                    runs=runs,
                    median_us=median,
                    mad_us=mad,
                    latencies_us=latencies,
                )
            )
        return summaries
