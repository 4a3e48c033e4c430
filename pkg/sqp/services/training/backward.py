import logging
from typing import Dict, Optional

import numpy as np

from sqp.exceptions.sqp_exceptions import CacheMismatchException
from sqp.models.enums import LayerType, PoolKind, WeightMode
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.training import SurrogateSpec
from sqp.services.model import layers as ops
from sqp.services.model.dnsmos import ForwardCache

log = logging.getLogger(__name__)


def _check_cache(
    graph: ModelGraph, cache: ForwardCache, weight_mode: Optional[WeightMode]
) -> None:
    if cache.layer_names != tuple(layer.name for layer in graph.layers):
        raise CacheMismatchException(
            error_description="Forward cache was produced by a different graph"
        )
    if cache.binary_weight_layers != graph.binary_weight_layers:
        raise CacheMismatchException(
            error_description="Forward cache used a different weight binarization"
        )
    if weight_mode is not None:
        cached_mode = WeightMode.BINARY if cache.binary_weight_layers else WeightMode.FLOAT
        if cached_mode != weight_mode:
            raise CacheMismatchException(
                error_description=f"Forward ran with {cached_mode.value} weights, "
                f"backward asked for {weight_mode.value}"
            )


def backward(
    graph: ModelGraph,
    weights: WeightSet,
    cache: ForwardCache,
    d_predictions: np.ndarray,
    surrogate: Optional[SurrogateSpec] = None,
    weight_mode: Optional[WeightMode] = None,
) -> Dict[str, np.ndarray]:
    """
    Gradients of every parameter given dL/d(prediction) per batch item.
    Binary-weight layers pass the kernel gradient straight through where
    |w| <= 1 and zero it elsewhere.
    """
    _check_cache(graph, cache, weight_mode)
    beta = graph.beta if surrogate is None else surrogate.beta
    dtype = weights.dtype
    grad = np.asarray(d_predictions, dtype=dtype).reshape(-1, 1)
    grads: Dict[str, np.ndarray] = {}
    first_conv = graph.conv_layers[0].name

    for layer in reversed(graph.layers):
        layer_input = cache.inputs[layer.name]
        if layer.layer_type == LayerType.DENSE:
            grad = ops.activation_backward(
                layer.activation, cache.preactivations[layer.name], grad, beta
            )
            d_weight, d_bias, grad = ops.dense_backward(
                layer_input, weights[layer.weight_name], grad
            )
            grads[layer.weight_name], grads[layer.bias_name] = d_weight, d_bias
        elif layer.layer_type == LayerType.GLOBAL_POOL:
            if layer.pool == PoolKind.GLOBAL_AVG:
                grad = ops.global_avg_backward(grad, layer_input.shape)
            else:
                grad = ops.global_max_backward(
                    grad, cache.pool_argmax[layer.name], layer_input.shape
                )
        elif layer.layer_type == LayerType.DROPOUT:
            if layer.name in cache.dropout_masks:
                grad = grad * cache.dropout_masks[layer.name]
        elif layer.layer_type == LayerType.MAXPOOL:
            grad = ops.maxpool2x2_backward(
                grad, cache.pool_argmax[layer.name], layer_input.shape
            )
        elif layer.layer_type == LayerType.CONV:
            grad = ops.activation_backward(
                layer.activation, cache.preactivations[layer.name], grad, beta
            )
            d_kernel, d_bias, grad = ops.conv2d_backward(
                layer_input,
                cache.effective_weights[layer.name],
                grad,
                need_input_grad=layer.name != first_conv,
            )
            if layer.name in graph.binary_weight_layers:
                d_kernel = d_kernel * (np.abs(weights[layer.weight_name]) <= 1)
            grads[layer.weight_name], grads[layer.bias_name] = d_kernel, d_bias

    return {name: grads[name].astype(dtype, copy=False) for name in weights.names()}
