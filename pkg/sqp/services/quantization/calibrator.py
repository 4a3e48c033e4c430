import logging
from typing import Dict, Sequence

import numpy as np

from sqp.exceptions.sqp_exceptions import EmptyInputException, MissingQuantParamsException
from sqp.models.dataset import SampleRecord
from sqp.models.enums import ActivationKind, ForwardMode, LayerType
from sqp.models.model_graph import LayerSpec, ModelGraph, WeightSet
from sqp.models.quant_params import LayerQuantParams, QuantTable
from sqp.models.quantized_model import QuantizedModel
from sqp.services.dataset.dataset_service import stack_records
from sqp.services.model.dnsmos import effective_weight, forward
from sqp.services.quantization.affine import (
    activation_qparams,
    quantize,
    weight_qparams,
)
from sqp.services.quantization.observers import (
    HistogramObserver,
    PerChannelObserver,
    range_search,
)

log = logging.getLogger(__name__)

INT32_MIN = np.iinfo(np.int32).min
INT32_MAX = np.iinfo(np.int32).max


class Calibrator:
    def __init__(self, histogram_bins: int = 2048, batch_size: int = 8):
        self._histogram_bins = histogram_bins
        self._batch_size = batch_size

    def calibrate(
        self,
        graph: ModelGraph,
        weights: WeightSet,
        calib_set: Sequence[SampleRecord],
    ) -> QuantTable:
        """Histogram range search on every conv/dense input and output."""
        if not calib_set:
            raise EmptyInputException(error_description="Calibration set is empty")
        spectrograms, _ = stack_records(calib_set)
        inputs: Dict[str, HistogramObserver] = {}
        outputs: Dict[str, HistogramObserver] = {}
        for layer in graph.parametric_layers:
            inputs[layer.name] = HistogramObserver(self._histogram_bins)
            outputs[layer.name] = HistogramObserver(self._histogram_bins)

        def record(layer: LayerSpec, layer_input: np.ndarray, layer_output: np.ndarray):
            if layer.is_parametric:
                inputs[layer.name].observe(layer_input)
                outputs[layer.name].observe(layer_output)

        for start in range(0, len(spectrograms), self._batch_size):
            forward(
                graph,
                weights,
                spectrograms[start : start + self._batch_size],
                ForwardMode.EVAL,
                hook=record,
            )

        layers = {}
        binary_input = False
        for layer in graph.parametric_layers:
            channel_observer = PerChannelObserver(axis=0).observe(
                effective_weight(graph, weights, layer)
            )
            binary_output = layer.activation == ActivationKind.HEAVISIDE
            # Heaviside maps only hold 0 and 1, even when calibration saw one value
            input_range = (0.0, 1.0) if binary_input else range_search(inputs[layer.name])
            output_range = (0.0, 1.0) if binary_output else range_search(outputs[layer.name])
            layers[layer.name] = LayerQuantParams(
                input=activation_qparams(*input_range),
                output=activation_qparams(*output_range),
                weight=weight_qparams(channel_observer.min, channel_observer.max),
            )
            binary_input = binary_output and layer.layer_type == LayerType.CONV
            log.debug(
                "%s: input scale %.6g, output scale %.6g",
                layer.name,
                layers[layer.name].input.scale[0],
                layers[layer.name].output.scale[0],
            )
        log.info("Calibrated %d layers on %d samples", len(layers), len(calib_set))
        return QuantTable(layers=layers)


def quantize_model(
    graph: ModelGraph, weights: WeightSet, table: QuantTable
) -> QuantizedModel:
    names = [layer.name for layer in graph.parametric_layers]
    missing = table.missing(names)
    if missing:
        raise MissingQuantParamsException(layer_names=missing)

    quantized, biases, bias_scales = {}, {}, {}
    for layer in graph.parametric_layers:
        params = table[layer.name]
        quantized[layer.name] = quantize(effective_weight(graph, weights, layer), params.weight)
        bias_scale = params.input.scale[0] * np.asarray(params.weight.scale, dtype=np.float64)
        bias = np.rint(weights[layer.bias_name].astype(np.float64) / bias_scale)
        biases[layer.name] = np.clip(bias, INT32_MIN, INT32_MAX).astype(np.int32)
        bias_scales[layer.name] = bias_scale
    return QuantizedModel(
        graph=graph,
        table=table,
        weights=quantized,
        biases=biases,
        bias_scales=bias_scales,
    )


def dequantized_weights(model: QuantizedModel) -> WeightSet:
    """Float weights on the int8 grid, for side-by-side checks."""
    params = {}
    for layer in model.graph.parametric_layers:
        q = model.weights[layer.name]
        scale = q.qparams.broadcast_scale(q.data.ndim)
        params[layer.weight_name] = (q.data.astype(np.float64) * scale).astype(np.float32)
        params[layer.bias_name] = (
            model.biases[layer.name].astype(np.float64) * model.bias_scales[layer.name]
        ).astype(np.float32)
    return WeightSet(params=params)
