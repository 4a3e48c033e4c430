from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from sqp.exceptions.sqp_exceptions import ShapeMismatchException
from sqp.models.enums import ActivationKind, LayerType, ModelVariant, PoolKind

KERNEL_SIZE = 3


class LayerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    layer_type: LayerType
    in_channels: int = 0
    out_channels: int = 0
    activation: Optional[ActivationKind] = None
    pool: Optional[PoolKind] = None
    dropout_rate: float = Field(default=0.0, ge=0.0, lt=1.0)

    @property
    def is_parametric(self) -> bool:
        return self.layer_type in (LayerType.CONV, LayerType.DENSE)

    @property
    def weight_name(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias_name(self) -> str:
        return f"{self.name}.bias"

    @property
    def weight_shape(self) -> Tuple[int, ...]:
        if self.layer_type == LayerType.CONV:
            return (self.out_channels, self.in_channels, KERNEL_SIZE, KERNEL_SIZE)
        return (self.out_channels, self.in_channels)


class LayerShape(BaseModel):
    model_config = ConfigDict(frozen=True)

    layer: LayerSpec
    shape: Tuple[int, ...]

    @property
    def spatial_positions(self) -> int:
        return int(np.prod(self.shape[:-1])) if len(self.shape) == 3 else 1

    @property
    def elements(self) -> int:
        return int(np.prod(self.shape))


class ModelGraph(BaseModel):
    """Fixed layer stack; activations are NHWC, kernels (out, in, kh, kw)."""

    model_config = ConfigDict(frozen=True)

    variant: ModelVariant
    input_shape: Tuple[int, int]
    layers: Tuple[LayerSpec, ...]
    beta: float = Field(default=5.0, gt=0.0)
    binary_weight_layers: FrozenSet[str] = frozenset()

    @model_validator(mode="after")
    def _check(self) -> "ModelGraph":
        if min(self.input_shape) < 1:
            raise ValueError(f"input shape {self.input_shape} must be positive")
        names = {layer.name for layer in self.layers}
        unknown = self.binary_weight_layers - names
        if unknown:
            raise ValueError(f"unknown binary-weight layers {sorted(unknown)}")
        for layer in self.layers:
            if layer.activation == ActivationKind.RELAXED and layer.layer_type != LayerType.CONV:
                raise ValueError("relaxed activations are only defined on conv layers")
        self.output_shapes()
        return self

    @property
    def parametric_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.is_parametric]

    @property
    def conv_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.layer_type == LayerType.CONV]

    @property
    def dense_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.layer_type == LayerType.DENSE]

    @property
    def binarized(self) -> bool:
        return any(
            layer.activation in (ActivationKind.HEAVISIDE, ActivationKind.RELAXED)
            for layer in self.conv_layers
        )

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes: Dict[str, Tuple[int, ...]] = {}
        for layer in self.parametric_layers:
            shapes[layer.weight_name] = layer.weight_shape
            shapes[layer.bias_name] = (layer.out_channels,)
        return shapes

    def output_shapes(self) -> List[LayerShape]:
        height, width = self.input_shape
        channels = 1
        features = None
        shapes = []
        for layer in self.layers:
            if layer.layer_type == LayerType.CONV:
                if features is not None or layer.in_channels != channels:
                    raise ValueError(f"{layer.name}: expects {layer.in_channels} channels")
                channels = layer.out_channels
            elif layer.layer_type == LayerType.MAXPOOL:
                height, width = height // 2, width // 2
                if height < 1 or width < 1:
                    raise ValueError(f"{layer.name}: input {self.input_shape} too small")
            elif layer.layer_type == LayerType.GLOBAL_POOL:
                features = channels
            elif layer.layer_type == LayerType.DENSE:
                if (features or 0) != layer.in_channels:
                    raise ValueError(f"{layer.name}: expects {layer.in_channels} features")
                features = layer.out_channels
            shape = (height, width, channels) if features is None else (1, features)
            shapes.append(LayerShape(layer=layer, shape=shape))
        return shapes


class WeightSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def names(self) -> List[str]:
        return list(self.params)

    @property
    def n_params(self) -> int:
        return int(sum(array.size for array in self.params.values()))

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.params.values())).dtype

    def copy(self) -> "WeightSet":
        return WeightSet(params={k: v.copy() for k, v in self.params.items()})

    def astype(self, dtype) -> "WeightSet":
        return WeightSet(params={k: v.astype(dtype) for k, v in self.params.items()})

    def check_against(self, graph: ModelGraph) -> None:
        expected = graph.param_shapes()
        if set(expected) != set(self.params):
            raise ShapeMismatchException(
                expected=sorted(expected), actual=sorted(self.params), what="parameter names"
            )
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeMismatchException(
                    expected=shape, actual=self.params[name].shape, what=name
                )
