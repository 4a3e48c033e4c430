import pytest

from sqp.services.engine.memory_service import MemoryService, memory_report


def test_memory_numbers_at_full_segment_shape():
    report = MemoryService().report()
    assert report.activation_count == 2_315_649
    assert report.input_elements == 53_880
    assert report.baseline_bytes == 9_478_116
    assert report.packed_bytes == 343_337
    assert report.ratio == pytest.approx(27.606, abs=1e-3)
    assert 21.25 <= report.ratio <= 28.75
    assert report.packed_mb <= 0.40
    assert [layer.layer for layer in report.layers][:2] == ["conv1", "conv2"]
    assert sum(layer.bits_packed for layer in report.layers) == report.activation_count


def test_shorter_input_shrinks_both_sides():
    small = memory_report((149, 120))
    assert small.baseline_bytes < 9_478_116
    assert small.packed_bytes < 343_337
    assert small.ratio > 20
