import numpy as np
import pytest
from pydantic import ValidationError

from sqp.exceptions.sqp_exceptions import ShapeMismatchException
from sqp.models.enums import ActivationKind, LayerType, ModelVariant
from sqp.models.model_graph import ModelGraph
from sqp.services.model.dnsmos import build_dnsmos, build_graph


def test_param_shapes_follow_layer_specs():
    graph = build_graph(ModelVariant.BAM, (16, 20))
    shapes = graph.param_shapes()
    assert shapes["conv1.weight"] == (32, 1, 3, 3)
    assert shapes["conv4.weight"] == (64, 32, 3, 3)
    assert shapes["dense3.weight"] == (1, 64)
    assert shapes["dense3.bias"] == (1,)
    assert [layer.name for layer in graph.parametric_layers] == [
        "conv1", "conv2", "conv3", "conv4", "dense1", "dense2", "dense3",
    ]
    assert graph.binarized
    assert not build_graph(ModelVariant.BASELINE, (16, 20)).binarized


def test_unknown_binary_weight_layer_is_rejected():
    graph = build_graph(ModelVariant.BAM, (16, 20))
    with pytest.raises(ValidationError, match="unknown binary-weight layers"):
        ModelGraph(
            variant=graph.variant,
            input_shape=graph.input_shape,
            layers=graph.layers,
            binary_weight_layers=frozenset({"conv9"}),
        )


def test_relaxed_activation_only_on_conv_layers():
    graph = build_graph(ModelVariant.BAM, (16, 20))
    layers = tuple(
        layer.model_copy(update={"activation": ActivationKind.RELAXED})
        if layer.layer_type == LayerType.DENSE
        else layer
        for layer in graph.layers
    )
    with pytest.raises(ValidationError, match="only defined on conv layers"):
        ModelGraph(variant=graph.variant, input_shape=graph.input_shape, layers=layers)


def test_chained_channel_mismatch_is_rejected():
    graph = build_graph(ModelVariant.BASELINE, (16, 20))
    layers = tuple(
        layer.model_copy(update={"in_channels": 16}) if layer.name == "conv2" else layer
        for layer in graph.layers
    )
    with pytest.raises(ValidationError, match="conv2: expects 16 channels"):
        ModelGraph(variant=graph.variant, input_shape=graph.input_shape, layers=layers)


def test_weight_set_checks_names_and_shapes():
    graph, weights = build_dnsmos(ModelVariant.BASELINE, (16, 20), seed=0)
    weights.check_against(graph)
    assert weights.n_params == 45697

    missing = weights.copy()
    del missing.params["dense3.bias"]
    with pytest.raises(ShapeMismatchException):
        missing.check_against(graph)

    reshaped = weights.copy()
    reshaped.params["conv1.bias"] = np.zeros(31, np.float32)
    with pytest.raises(ShapeMismatchException, match="conv1.bias"):
        reshaped.check_against(graph)


def test_astype_converts_every_tensor():
    _, weights = build_dnsmos(ModelVariant.BAM, (16, 20), seed=0)
    converted = weights.astype(np.float64)
    assert converted.dtype == np.float64
    assert all(array.dtype == np.float64 for array in converted.params.values())
    assert weights.dtype == np.float32
