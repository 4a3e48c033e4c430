import logging
from typing import Optional

import numpy as np

from sqp.models.engine import EngineConfig
from sqp.models.enums import ActivationKind, LayerType, PoolKind
from sqp.models.quant_params import QuantParams
from sqp.models.quantized_model import QuantizedModel
from sqp.services.engine.reference_engine import InferenceEngine
from sqp.services.model import layers as ops
from sqp.services.quantization.affine import dequantize_array, quantize_array

log = logging.getLogger(__name__)


def requantize(q: np.ndarray, source: Optional[QuantParams], target: QuantParams) -> np.ndarray:
    """Move grid values to another grid; source None means q holds real values."""
    if source is None:
        return quantize_array(q, target)
    if source == target:
        return q
    return quantize_array(dequantize_array(q, source), target)


class Int8DenseEngine(InferenceEngine):
    """
    Whole-model static 8-bit inference: uint8 activations, int8 per-channel
    weights, int32-range accumulators and requantization at every layer edge.
    Max pooling runs on the uint8 grid directly.
    """

    def __init__(self, model: QuantizedModel, config: EngineConfig):
        super().__init__(model.graph, config)
        self.model = model

    def _layer(self, layer, q: np.ndarray, qp: Optional[QuantParams]):
        params = self.model.table[layer.name]
        centered = requantize(q, qp, params.input) - params.input.zero_point[0]
        kernel = self.model.weights[layer.name].data.astype(np.float64)
        bias = self.model.biases[layer.name].astype(np.float64)
        if layer.layer_type == LayerType.CONV:
            sums = ops.conv2d_forward(centered.astype(np.float64), kernel, bias)
        else:
            sums = ops.dense_forward(centered.astype(np.float64), kernel, bias)
        acc = np.rint(sums).astype(np.int64)
        if layer.activation == ActivationKind.HEAVISIDE:
            real = (acc >= 0).astype(np.float64)
        else:
            real = ops.activation_forward(
                layer.activation, acc * self.model.bias_scales[layer.name], self.graph.beta
            )
        return quantize_array(real, params.output), params.output

    def infer(self, x) -> float:
        q = self._single_input(x)[None, ..., None]
        qp: Optional[QuantParams] = None
        for layer in self.graph.layers:
            if layer.is_parametric:
                q, qp = self._layer(layer, q, qp)
            elif layer.layer_type == LayerType.MAXPOOL:
                q, _ = ops.maxpool2x2_forward(q)
            elif layer.layer_type == LayerType.GLOBAL_POOL:
                if layer.pool == PoolKind.GLOBAL_MAX:
                    q, _ = ops.global_max_forward(q)
                else:
                    q = ops.global_avg_forward(dequantize_array(q, qp))
                    qp = None
        return float(dequantize_array(q, qp)[0, 0])
