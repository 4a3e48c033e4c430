import json
import logging
import struct
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from sqp.constants import QUANT_SECTION_TAG, WEIGHTS_MAGIC
from sqp.exceptions.sqp_exceptions import FileFormatException
from sqp.models.enums import ModelVariant
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.quant_params import LayerQuantParams, QuantParams, QuantTable
from sqp.models.quantized_model import QuantizedModel
from sqp.models.tensors import TensorI8
from sqp.services.model.dnsmos import build_graph

log = logging.getLogger(__name__)

VERSION = 1
INT_TENSOR_TAG = b"QINT"
QUANT_ROLES = ("input", "output", "weight")
_INT_DTYPES = {0: np.dtype("<i1"), 1: np.dtype("<i4")}


class Checkpoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    graph: ModelGraph
    weights: WeightSet
    table: Optional[QuantTable] = None
    quantized: Optional[QuantizedModel] = None


def _u32(value: int) -> bytes:
    return struct.pack("<I", value)


def _name(name: str) -> bytes:
    encoded = name.encode("utf-8")
    return _u32(len(encoded)) + encoded


def _quant_section(table: QuantTable) -> bytes:
    entries = []
    for layer_name, params in table.layers.items():
        for role in QUANT_ROLES:
            qp: QuantParams = getattr(params, role)
            entries.append(
                _name(f"{layer_name}.{role}")
                + _u32(len(qp.scale))
                + np.asarray(qp.scale, dtype="<f8").tobytes()
                + np.asarray(qp.zero_point, dtype="<i4").tobytes()
                + struct.pack("<ii", qp.qmin, qp.qmax)
            )
    return _u32(len(entries)) + b"".join(entries)


def _int_section(model: QuantizedModel) -> bytes:
    entries = []
    for layer in model.graph.parametric_layers:
        for name, array, code in (
            (layer.weight_name, model.weights[layer.name].data, 0),
            (layer.bias_name, model.biases[layer.name], 1),
        ):
            data = np.ascontiguousarray(array, dtype=_INT_DTYPES[code])
            entries.append(
                _name(name)
                + struct.pack("<B", code)
                + _u32(data.ndim)
                + b"".join(_u32(dim) for dim in data.shape)
                + data.tobytes()
            )
    return _u32(len(entries)) + b"".join(entries)


def _section(tag: bytes, body: bytes) -> bytes:
    return tag + _u32(len(body)) + body


def write_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    graph, weights = checkpoint.graph, checkpoint.weights
    weights.check_against(graph)
    meta = json.dumps(
        {
            "variant": graph.variant.value,
            "input_shape": list(graph.input_shape),
            "binary_weight_layers": sorted(graph.binary_weight_layers),
            "beta": graph.beta,
            "quantized": checkpoint.quantized is not None,
        },
        sort_keys=True,
    ).encode("utf-8")

    parts = [WEIGHTS_MAGIC, _u32(VERSION), _u32(len(meta)), meta, _u32(len(weights.params))]
    for name, array in weights.params.items():
        data = np.ascontiguousarray(array, dtype="<f4")
        parts.append(
            _name(name)
            + _u32(data.ndim)
            + b"".join(_u32(dim) for dim in data.shape)
            + data.tobytes()
        )
    table = checkpoint.quantized.table if checkpoint.quantized else checkpoint.table
    if table is not None:
        parts.append(_section(QUANT_SECTION_TAG, _quant_section(table)))
    if checkpoint.quantized is not None:
        parts.append(_section(INT_TENSOR_TAG, _int_section(checkpoint.quantized)))
    with open(path, "wb") as file:
        file.write(b"".join(parts))
    log.info("Wrote %s checkpoint to %s", graph.variant.value, path)


class _Reader:
    def __init__(self, path: str, payload: bytes):
        self.path = path
        self.payload = payload
        self.offset = 0

    def take(self, count: int) -> bytes:
        if count < 0 or self.offset + count > len(self.payload):
            raise FileFormatException(path=self.path, error_description="truncated checkpoint")
        chunk = self.payload[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def name(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def shape(self) -> Tuple[int, ...]:
        return tuple(self.u32() for _ in range(self.u32()))

    def array(self, dtype, shape) -> np.ndarray:
        dtype = np.dtype(dtype)
        count = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.take(count * dtype.itemsize), dtype=dtype).reshape(shape)

    @property
    def done(self) -> bool:
        return self.offset == len(self.payload)


def _read_quant_section(reader: _Reader) -> QuantTable:
    roles: Dict[str, Dict[str, QuantParams]] = {}
    for _ in range(reader.u32()):
        layer_name, _, role = reader.name().rpartition(".")
        n = reader.u32()
        scale = reader.array("<f8", (n,))
        zero_point = reader.array("<i4", (n,))
        qmin, qmax = struct.unpack("<ii", reader.take(8))
        roles.setdefault(layer_name, {})[role] = QuantParams(
            scale=scale.tolist(),
            zero_point=zero_point.tolist(),
            qmin=qmin,
            qmax=qmax,
            axis=0 if role == "weight" else None,
        )
    layers = {}
    for layer_name, params in roles.items():
        if set(params) != set(QUANT_ROLES):
            raise FileFormatException(
                path=reader.path, error_description=f"incomplete parameters for {layer_name}"
            )
        layers[layer_name] = LayerQuantParams(**params)
    return QuantTable(layers=layers)


def _read_int_section(reader: _Reader) -> Dict[str, np.ndarray]:
    arrays = {}
    for _ in range(reader.u32()):
        name = reader.name()
        code = struct.unpack("<B", reader.take(1))[0]
        if code not in _INT_DTYPES:
            raise FileFormatException(
                path=reader.path, error_description=f"unknown integer dtype code {code}"
            )
        arrays[name] = reader.array(_INT_DTYPES[code], reader.shape()).copy()
    return arrays


def _assemble_quantized(
    path: str, graph: ModelGraph, table: QuantTable, arrays: Dict[str, np.ndarray]
) -> QuantizedModel:
    weights, biases, bias_scales = {}, {}, {}
    for layer in graph.parametric_layers:
        if layer.weight_name not in arrays or layer.bias_name not in arrays:
            raise FileFormatException(
                path=path, error_description=f"missing integer tensors for {layer.name}"
            )
        params = table[layer.name]
        weights[layer.name] = TensorI8(
            data=arrays[layer.weight_name].astype(np.int8), qparams=params.weight
        )
        biases[layer.name] = arrays[layer.bias_name].astype(np.int32)
        bias_scales[layer.name] = params.input.scale[0] * np.asarray(
            params.weight.scale, dtype=np.float64
        )
    return QuantizedModel(
        graph=graph, table=table, weights=weights, biases=biases, bias_scales=bias_scales
    )


def read_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as file:
        reader = _Reader(path, file.read())
    if reader.take(4) != WEIGHTS_MAGIC:
        raise FileFormatException(path=path, error_description="bad magic")
    version = reader.u32()
    if version != VERSION:
        raise FileFormatException(path=path, error_description=f"unsupported version {version}")
    try:
        meta = json.loads(reader.take(reader.u32()).decode("utf-8"))
        graph = build_graph(
            ModelVariant(meta["variant"]), tuple(meta["input_shape"]), float(meta["beta"])
        )
        if sorted(graph.binary_weight_layers) != meta["binary_weight_layers"]:
            raise ValueError("binary weight layers do not match the variant")
    except (ValueError, KeyError, TypeError) as exception:
        raise FileFormatException(path=path, error_description="invalid metadata") from exception

    params = {}
    for _ in range(reader.u32()):
        name = reader.name()
        params[name] = reader.array("<f4", reader.shape()).astype(np.float32)
    weights = WeightSet(params=params)
    weights.check_against(graph)

    table: Optional[QuantTable] = None
    arrays: Optional[Dict[str, np.ndarray]] = None
    while not reader.done:
        tag = reader.take(4)
        body = _Reader(path, reader.take(reader.u32()))
        if tag == QUANT_SECTION_TAG:
            table = _read_quant_section(body)
        elif tag == INT_TENSOR_TAG:
            arrays = _read_int_section(body)
        else:
            log.warning("%s: skipping unknown section %r", path, tag)

    quantized = None
    if meta.get("quantized"):
        if table is None or arrays is None:
            raise FileFormatException(
                path=path, error_description="quantized checkpoint lacks its sections"
            )
        quantized = _assemble_quantized(path, graph, table, arrays)
    return Checkpoint(graph=graph, weights=weights, table=table, quantized=quantized)
