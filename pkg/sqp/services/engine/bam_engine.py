import logging
from typing import Dict, Optional, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import ConfigurationException
from sqp.models.engine import EngineConfig
from sqp.models.enums import (
    ActivationKind,
    ConvBackend,
    LayerType,
    PoolKind,
    WeightPrecision,
)
from sqp.models.model_graph import LayerSpec, ModelGraph, WeightSet
from sqp.models.quantized_model import QuantizedModel
from sqp.models.reports import MultiplyCount
from sqp.models.tensors import PackedFeatureMap
from sqp.services.engine import packed_ops
from sqp.services.engine.reference_engine import InferenceEngine
from sqp.services.model import layers as ops
from sqp.services.model.dnsmos import count_layer_costs, effective_weight
from sqp.services.quantization.affine import grid_integer, quantize_array

log = logging.getLogger(__name__)

INT32_LIMIT = 2**31


def accumulator_bound(layer: LayerSpec, input_max: int, bias_max: int) -> int:
    """Largest |accumulator| of a conv layer with int8 weights (|q| <= 128)."""
    return 9 * layer.in_channels * 128 * input_max + bias_max


def binary_threshold(q_bias: np.ndarray, q_one: int) -> np.ndarray:
    """ceil(-q_bias / q_one): smallest set-bit sum whose preactivation is >= 0."""
    return -(np.asarray(q_bias, dtype=np.int64) // q_one)


def check_bam_graph(graph: ModelGraph) -> None:
    for layer in graph.conv_layers:
        if layer.activation != ActivationKind.HEAVISIDE:
            raise ConfigurationException(
                error_description=f"{layer.name} uses {layer.activation.value}; the packed "
                "engine needs Heaviside conv activations"
            )
    final = next(layer for layer in graph.layers if layer.layer_type == LayerType.GLOBAL_POOL)
    if final.pool != PoolKind.GLOBAL_AVG:
        raise ConfigurationException(
            error_description="The packed engine needs global average pooling"
        )


def dense_head_fp32(graph: ModelGraph, weights: WeightSet, features: np.ndarray) -> float:
    value = features.astype(np.float64)
    for layer in graph.dense_layers:
        pre = value @ weights[layer.weight_name].astype(np.float64).T
        pre = pre + weights[layer.bias_name].astype(np.float64)
        value = ops.activation_forward(layer.activation, pre, graph.beta)
    return float(value[0])


def dense_head_int8(model: QuantizedModel, features: np.ndarray) -> float:
    """uint8 inputs x int8 weights with int32-range accumulators per dense layer."""
    value = features.astype(np.float64)
    for layer in model.graph.dense_layers:
        input_qp = model.table[layer.name].input
        centered = quantize_array(value, input_qp) - input_qp.zero_point[0]
        acc = centered @ model.weights[layer.name].data.astype(np.int64).T
        acc = acc + model.biases[layer.name].astype(np.int64)
        value = ops.activation_forward(
            layer.activation, acc * model.bias_scales[layer.name], model.graph.beta
        )
    return float(value[0])


def first_conv_int8(model: QuantizedModel, layer: LayerSpec, x: np.ndarray) -> np.ndarray:
    """Integer sums of (q_x - z_x) * q_w for the dense first layer, (C, H, W)."""
    input_qp = model.table[layer.name].input
    centered = quantize_array(x, input_qp) - input_qp.zero_point[0]
    kernel = model.weights[layer.name].data.astype(np.float64)
    # every product and partial sum is an integer below 2**53, so float64 is exact
    sums = ops.conv2d_forward(
        centered.astype(np.float64)[None, ..., None], kernel, np.zeros(kernel.shape[0])
    )
    return np.rint(sums[0]).astype(np.int64).transpose(2, 0, 1)


class BamEngine(InferenceEngine):
    """
    Binary activation maps between conv layers are kept bit-packed. The first
    conv reads the spectrogram densely; conv 2-4 add weights under set bits.
    """

    def __init__(
        self,
        graph: ModelGraph,
        weights: WeightSet,
        config: EngineConfig,
        quantized: Optional[QuantizedModel] = None,
    ):
        super().__init__(graph, config)
        check_bam_graph(graph)
        weights.check_against(graph)
        self.weights = weights
        self.quantized = quantized
        self.int8 = config.conv_precision == WeightPrecision.INT8
        if (self.int8 or config.dense_head == WeightPrecision.INT8) and quantized is None:
            raise ConfigurationException(
                error_description="int8 engine modes need calibrated quantization parameters"
            )
        if config.backend == ConvBackend.BITPLANE and not self.int8:
            raise ConfigurationException(
                error_description="The bit-plane backend needs int8 conv weights"
            )
        self._first = graph.conv_layers[0].name
        self._kernels: Dict[str, np.ndarray] = {}
        self._biases: Dict[str, np.ndarray] = {}
        self._thresholds: Dict[str, np.ndarray] = {}
        for layer in graph.conv_layers:
            if self.int8:
                self._prepare_int8(layer)
            else:
                self._kernels[layer.name] = effective_weight(graph, weights, layer).astype(
                    np.float64
                )
                self._biases[layer.name] = weights[layer.bias_name].astype(np.float64)

    def _prepare_int8(self, layer: LayerSpec) -> None:
        model = self.quantized
        q_bias = model.biases[layer.name].astype(np.int64)
        input_qp = model.table[layer.name].input
        if layer.name == self._first:
            input_max = max(input_qp.qmax - input_qp.zero_point[0], input_qp.zero_point[0])
            threshold = -q_bias
        else:
            input_max = grid_integer(1.0, input_qp)
            threshold = binary_threshold(q_bias, input_max)
        bound = accumulator_bound(layer, input_max, int(np.abs(q_bias).max()))
        if bound >= INT32_LIMIT:
            raise ConfigurationException(
                error_description=f"{layer.name}: accumulator bound {bound} exceeds int32"
            )
        self._kernels[layer.name] = model.weights[layer.name].data
        self._thresholds[layer.name] = threshold

    def _first_layer(self, layer: LayerSpec, x: np.ndarray) -> PackedFeatureMap:
        if self.int8:
            return packed_ops.threshold_pack(
                first_conv_int8(self.quantized, layer, x), self._thresholds[layer.name]
            )
        pre = ops.conv2d_forward(
            x[None, ..., None], self._kernels[layer.name], self._biases[layer.name]
        )
        return packed_ops.threshold_pack(pre[0].transpose(2, 0, 1))

    def _binary_layer(self, layer: LayerSpec, fmap: PackedFeatureMap) -> PackedFeatureMap:
        if self.int8:
            acc = packed_ops.conv_bam(
                fmap, self._kernels[layer.name], backend=self.config.backend
            )
            return packed_ops.threshold_pack(acc, self._thresholds[layer.name])
        pre = packed_ops.conv_bam(
            fmap, self._kernels[layer.name], self._biases[layer.name], ConvBackend.MASKED
        )
        return packed_ops.threshold_pack(pre)

    def infer_trace(self, x) -> Tuple[float, Dict[str, PackedFeatureMap]]:
        """Prediction plus the packed map produced by every conv layer."""
        value = self._single_input(x)
        maps: Dict[str, PackedFeatureMap] = {}
        fmap: Optional[PackedFeatureMap] = None
        features = None
        for layer in self.graph.layers:
            if layer.layer_type == LayerType.CONV:
                if fmap is None:
                    fmap = self._first_layer(layer, value)
                else:
                    fmap = self._binary_layer(layer, fmap)
                maps[layer.name] = fmap
            elif layer.layer_type == LayerType.MAXPOOL:
                fmap = packed_ops.maxpool_or(fmap)
            elif layer.layer_type == LayerType.GLOBAL_POOL:
                features = packed_ops.global_avg(fmap)
        if self.config.dense_head == WeightPrecision.INT8:
            return dense_head_int8(self.quantized, features), maps
        return dense_head_fp32(self.graph, self.weights, features), maps

    def infer(self, x) -> float:
        return self.infer_trace(x)[0]


def emulate_bam_int8(
    model: QuantizedModel, weights: WeightSet, x, dense_head: WeightPrecision
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Dense reference for the int8 packed engine on the dequantized grid. Sums
    run over exact integers in float64 and are scaled afterwards, so a
    preactivation is zero exactly when its integer accumulator is.
    """
    graph = model.graph
    maps: Dict[str, np.ndarray] = {}
    value = np.asarray(x, dtype=np.float64)
    first = graph.conv_layers[0].name
    for layer in graph.layers:
        if layer.layer_type == LayerType.CONV:
            kernel = model.weights[layer.name].data.astype(np.float64)
            q_bias = model.biases[layer.name].astype(np.float64)
            scale = model.bias_scales[layer.name]
            if layer.name == first:
                qp = model.table[layer.name].input
                grid = (quantize_array(value, qp) - qp.zero_point[0])[None, ..., None]
            else:
                q_one = grid_integer(1.0, model.table[layer.name].input)
                grid = value * q_one
            pre = ops.conv2d_forward(grid.astype(np.float64), kernel, q_bias) * scale
            value = ops.heaviside(pre)
            maps[layer.name] = value[0].transpose(2, 0, 1) > 0
        elif layer.layer_type == LayerType.MAXPOOL:
            value, _ = ops.maxpool2x2_forward(value)
        elif layer.layer_type == LayerType.GLOBAL_POOL:
            value = ops.global_avg_forward(value)[0]
            break
    if dense_head == WeightPrecision.INT8:
        return dense_head_int8(model, value), maps
    return dense_head_fp32(graph, weights, value), maps


def count_engine_multiplies(graph: ModelGraph) -> MultiplyCount:
    """
    Real multiplications of one packed inference (dense first conv and dense
    head) against the products replaced by masked additions in conv 2-4.
    """
    counts = count_layer_costs(graph)
    first = graph.conv_layers[0].name
    real = counts.row(first).macs + sum(counts.row(d.name).macs for d in graph.dense_layers)
    replaced = sum(counts.row(c.name).macs for c in graph.conv_layers if c.name != first)
    return MultiplyCount(real_multiplies=real, replaced_by_additions=replaced)
