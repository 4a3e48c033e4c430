import math
from typing import Tuple

from sqp.constants import FULL_INPUT_SHAPE
from sqp.models.enums import ModelVariant
from sqp.models.reports import LayerMemory, MemoryReport
from sqp.services.model.dnsmos import build_graph, count_layer_costs

FP32_BYTES = 4
INPUT_BYTES_PACKED = 1


def memory_report(input_shape: Tuple[int, int] = FULL_INPUT_SHAPE) -> MemoryReport:
    """
    Analytic activation memory of one inference. The fp32 model keeps every
    layer output and the input at 4 bytes per value; the packed model keeps
    layer outputs at 1 bit and the input at 1 byte. Pool buffers are reused
    in place and not counted.
    """
    counts = count_layer_costs(build_graph(ModelVariant.BAM, input_shape))
    rows = [
        LayerMemory(
            layer=row.name,
            activations=row.activations,
            bytes_fp32=row.activations * FP32_BYTES,
            bits_packed=row.activations,
        )
        for row in counts.rows
        if row.activations
    ]
    activations = counts.total_activations
    input_elements = input_shape[0] * input_shape[1]
    return MemoryReport(
        layers=rows,
        input_shape=input_shape,
        activation_count=activations,
        input_elements=input_elements,
        baseline_bytes=(activations + input_elements) * FP32_BYTES,
        packed_activation_bytes=math.ceil(activations / 8),
        packed_input_bytes=input_elements * INPUT_BYTES_PACKED,
    )


class MemoryService:
    def __init__(self, input_shape: Tuple[int, int] = FULL_INPUT_SHAPE):
        self._input_shape = input_shape

    def report(self, input_shape=None) -> MemoryReport:
        return memory_report(self._input_shape if input_shape is None else input_shape)
