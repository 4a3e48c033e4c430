from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict

from sqp.models.model_graph import ModelGraph
from sqp.models.quant_params import QuantTable
from sqp.models.tensors import TensorI8


class QuantizedModel(BaseModel):
    """
    int8 per-channel kernels, int32 biases on the (input scale * weight scale)
    grid and the activation parameters of every layer edge.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    graph: ModelGraph
    table: QuantTable
    weights: Dict[str, TensorI8]
    biases: Dict[str, np.ndarray]
    bias_scales: Dict[str, np.ndarray]

    def weight_scales(self, layer_name: str) -> np.ndarray:
        return np.asarray(self.table[layer_name].weight.scale, dtype=np.float64)
