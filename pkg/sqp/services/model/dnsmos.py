import logging
from typing import Callable, Dict, FrozenSet, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from sqp.constants import DROPOUT_RATE, FULL_INPUT_SHAPE
from sqp.exceptions.sqp_exceptions import InvalidInputException, ShapeMismatchException
from sqp.models.enums import (
    ActivationKind,
    ForwardMode,
    LayerType,
    ModelVariant,
    PoolKind,
)
from sqp.models.model_graph import LayerSpec, ModelGraph, WeightSet
from sqp.models.reports import LayerCount, LayerCostTable
from sqp.models.tensors import TensorF32
from sqp.services.model import layers as ops

log = logging.getLogger(__name__)

ForwardHook = Callable[[LayerSpec, np.ndarray, np.ndarray], None]

CONV_CHANNELS = ((1, 32), (32, 32), (32, 32), (32, 64))
DENSE_FEATURES = ((64, 64), (64, 64), (64, 1))
DENSE_ACTIVATIONS = (ActivationKind.RELU, ActivationKind.RELU, ActivationKind.IDENTITY)


def build_graph(
    variant: ModelVariant,
    input_shape: Tuple[int, int] = FULL_INPUT_SHAPE,
    beta: float = 5.0,
) -> ModelGraph:
    binarized = variant != ModelVariant.BASELINE
    conv_activation = ActivationKind.HEAVISIDE if binarized else ActivationKind.RELU
    layers = []
    for index, (cin, cout) in enumerate(CONV_CHANNELS, start=1):
        layers.append(
            LayerSpec(
                name=f"conv{index}",
                layer_type=LayerType.CONV,
                in_channels=cin,
                out_channels=cout,
                activation=conv_activation,
            )
        )
        if index < len(CONV_CHANNELS):
            layers.append(
                LayerSpec(
                    name=f"pool{index}",
                    layer_type=LayerType.MAXPOOL,
                    pool=PoolKind.MAX_POOL_2X2,
                )
            )
            layers.append(
                LayerSpec(
                    name=f"dropout{index}",
                    layer_type=LayerType.DROPOUT,
                    dropout_rate=DROPOUT_RATE,
                )
            )
    layers.append(
        LayerSpec(
            name="global_pool",
            layer_type=LayerType.GLOBAL_POOL,
            pool=PoolKind.GLOBAL_AVG if binarized else PoolKind.GLOBAL_MAX,
        )
    )
    for index, ((fin, fout), activation) in enumerate(
        zip(DENSE_FEATURES, DENSE_ACTIVATIONS), start=1
    ):
        layers.append(
            LayerSpec(
                name=f"dense{index}",
                layer_type=LayerType.DENSE,
                in_channels=fin,
                out_channels=fout,
                activation=activation,
            )
        )
    binary_weight_layers = (
        frozenset(f"conv{i}" for i in range(1, len(CONV_CHANNELS) + 1))
        if variant == ModelVariant.BAM_BINARY_WEIGHTS
        else frozenset()
    )
    return ModelGraph(
        variant=variant,
        input_shape=input_shape,
        layers=tuple(layers),
        beta=beta,
        binary_weight_layers=binary_weight_layers,
    )


def init_weights(
    graph: ModelGraph, rng: np.random.Generator, dtype=np.float32
) -> WeightSet:
    """Kaiming-uniform over fan-in, zero biases."""
    params: Dict[str, np.ndarray] = {}
    for layer in graph.parametric_layers:
        fan_in = int(np.prod(layer.weight_shape[1:]))
        bound = np.sqrt(6.0 / fan_in)
        params[layer.weight_name] = rng.uniform(-bound, bound, layer.weight_shape).astype(
            dtype
        )
        params[layer.bias_name] = np.zeros(layer.out_channels, dtype=dtype)
    return WeightSet(params=params)


def build_dnsmos(
    variant: ModelVariant,
    input_shape: Tuple[int, int] = FULL_INPUT_SHAPE,
    beta: float = 5.0,
    seed: int = 0,
) -> Tuple[ModelGraph, WeightSet]:
    graph = build_graph(variant, input_shape, beta)
    weights = init_weights(graph, np.random.default_rng(seed))
    log.debug(
        "Built %s graph for input %s with %d parameters",
        variant.value,
        input_shape,
        weights.n_params,
    )
    return graph, weights


class ForwardCache(BaseModel):
    """Per-layer values of one forward call, consumed by backprop."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    layer_names: Tuple[str, ...]
    binary_weight_layers: FrozenSet[str]
    mode: ForwardMode
    inputs: Dict[str, np.ndarray] = {}
    preactivations: Dict[str, np.ndarray] = {}
    pool_argmax: Dict[str, np.ndarray] = {}
    dropout_masks: Dict[str, np.ndarray] = {}
    effective_weights: Dict[str, np.ndarray] = {}


def prepare_input(graph: ModelGraph, x, dtype) -> np.ndarray:
    """Accepts (H, W) or (N, H, W); returns NHWC with a single channel."""
    array = x.data if isinstance(x, TensorF32) else np.asarray(x)
    if array.ndim == 2:
        array = array[None]
    if array.ndim != 3 or tuple(array.shape[1:]) != tuple(graph.input_shape):
        raise ShapeMismatchException(
            expected=graph.input_shape, actual=array.shape, what="model input"
        )
    if not np.all(np.isfinite(array)):
        raise InvalidInputException(error_description="Model input contains NaN or inf")
    return array.astype(dtype, copy=False)[..., None]


def effective_weight(graph: ModelGraph, weights: WeightSet, layer: LayerSpec) -> np.ndarray:
    kernel = weights[layer.weight_name]
    if layer.name in graph.binary_weight_layers:
        return ops.binarize_weights(kernel)
    return kernel


def forward(
    graph: ModelGraph,
    weights: WeightSet,
    x: Union[np.ndarray, TensorF32],
    mode: ForwardMode = ForwardMode.EVAL,
    rng: Optional[np.random.Generator] = None,
    hook: Optional[ForwardHook] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """
    Run the stack on one spectrogram (H, W) or a batch (N, H, W). Returns the
    (N,) predictions and the cache. Dropout only runs in train mode.
    """
    if mode == ForwardMode.TRAIN and rng is None:
        raise InvalidInputException(error_description="Train-mode forward needs an rng")
    dtype = weights.dtype
    value = prepare_input(graph, x, dtype)
    cache = ForwardCache(
        layer_names=tuple(layer.name for layer in graph.layers),
        binary_weight_layers=graph.binary_weight_layers,
        mode=mode,
    )

    for layer in graph.layers:
        cache.inputs[layer.name] = value
        layer_input = value
        if layer.layer_type == LayerType.CONV:
            kernel = effective_weight(graph, weights, layer)
            cache.effective_weights[layer.name] = kernel
            pre = ops.conv2d_forward(value, kernel, weights[layer.bias_name])
            cache.preactivations[layer.name] = pre
            value = ops.activation_forward(layer.activation, pre, graph.beta)
        elif layer.layer_type == LayerType.DENSE:
            pre = ops.dense_forward(value, weights[layer.weight_name], weights[layer.bias_name])
            cache.preactivations[layer.name] = pre
            value = ops.activation_forward(layer.activation, pre, graph.beta)
        elif layer.layer_type == LayerType.MAXPOOL:
            value, cache.pool_argmax[layer.name] = ops.maxpool2x2_forward(value)
        elif layer.layer_type == LayerType.GLOBAL_POOL:
            if layer.pool == PoolKind.GLOBAL_AVG:
                value = ops.global_avg_forward(value)
            else:
                value, cache.pool_argmax[layer.name] = ops.global_max_forward(value)
        elif layer.layer_type == LayerType.DROPOUT and mode == ForwardMode.TRAIN:
            mask = ops.dropout_mask(rng, value.shape, layer.dropout_rate, dtype)
            cache.dropout_masks[layer.name] = mask
            value = value * mask
        if hook is not None:
            hook(layer, layer_input, value)

    return value[:, 0], cache


def predict(graph: ModelGraph, weights: WeightSet, x) -> float:
    predictions, _ = forward(graph, weights, x)
    if predictions.shape != (1,):
        raise ShapeMismatchException(
            expected=(1,), actual=predictions.shape, what="single prediction"
        )
    return float(predictions[0])


def predict_batched(
    graph: ModelGraph, weights: WeightSet, spectrograms: np.ndarray, batch_size: int = 16
) -> np.ndarray:
    outputs = [
        forward(graph, weights, spectrograms[start : start + batch_size])[0]
        for start in range(0, len(spectrograms), batch_size)
    ]
    return np.concatenate(outputs) if outputs else np.zeros(0, dtype=weights.dtype)


def count_layer_costs(graph: ModelGraph) -> LayerCostTable:
    """
    Parameters, multiply-adds and activations per layer. Multiply-adds are
    parameters times output positions, so each output carries one bias add.
    """
    rows = []
    for layer_shape in graph.output_shapes():
        layer = layer_shape.layer
        if layer.is_parametric:
            params = int(np.prod(layer.weight_shape)) + layer.out_channels
            rows.append(
                LayerCount(
                    name=layer.name,
                    output_shape=layer_shape.shape,
                    params=params,
                    macs=params * layer_shape.spatial_positions,
                    activations=layer_shape.elements,
                )
            )
        else:
            rows.append(LayerCount(name=layer.name, output_shape=layer_shape.shape))
    return LayerCostTable(rows=rows)
