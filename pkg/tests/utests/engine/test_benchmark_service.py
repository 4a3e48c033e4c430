import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import EmptyInputException, InvalidInputException
from sqp.models.enums import EngineKind
from sqp.services.engine.benchmark_service import BenchmarkService, median_and_mad
from sqp.services.engine.reference_engine import InferenceEngine


@pytest.fixture
def engine(mocker):
    fake = mocker.Mock(spec=InferenceEngine)
    fake.kind = EngineKind.BAM_INT8
    return fake


def test_median_and_mad():
    assert median_and_mad([1.0, 3.0, 2.0, 10.0]) == (2.5, 1.0)


def test_latencies_come_from_the_monotonic_clock(mocker, engine):
    clock = mocker.patch("sqp.services.engine.benchmark_service.time")
    clock.perf_counter_ns.side_effect = [0, 1_000, 2_000, 5_000, 6_000, 8_000]
    inputs = [np.zeros((4, 4)), np.ones((4, 4))]
    (summary,) = BenchmarkService(runs=3, warmup=3).run([engine], inputs)
    assert summary.latencies_us == [1.0, 3.0, 2.0]
    assert (summary.median_us, summary.mad_us) == (2.0, 1.0)
    assert summary.engine == EngineKind.BAM_INT8
    assert engine.infer.call_count == 6


def test_benchmark_arguments_are_checked(engine):
    service = BenchmarkService()
    with pytest.raises(InvalidInputException, match="warmup"):
        service.run([engine], [np.zeros(2)], warmup=2)
    with pytest.raises(InvalidInputException):
        service.run([engine], [np.zeros(2)], runs=0)
    with pytest.raises(EmptyInputException):
        service.run([engine], [])
