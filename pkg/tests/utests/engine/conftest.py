import numpy as np
import pytest

from sqp.models.enums import ModelVariant
from sqp.services.model.dnsmos import build_dnsmos
from sqp.services.quantization.calibrator import Calibrator, quantize_model


@pytest.fixture
def bam_model(toy_records):
    """A BAM graph with non-zero biases, calibrated and quantized on toy data."""
    graph, weights = build_dnsmos(ModelVariant.BAM, (16, 20), seed=11)
    rng = np.random.default_rng(11)
    for layer in graph.parametric_layers:
        weights.params[layer.bias_name] = rng.normal(0, 0.3, layer.out_channels).astype(np.float32)
    table = Calibrator(histogram_bins=256, batch_size=8).calibrate(graph, weights, toy_records[:12])
    return graph, weights, quantize_model(graph, weights, table)
