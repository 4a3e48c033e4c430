import logging
import struct
from typing import List, Sequence, Tuple

import numpy as np

from sqp.constants import DATASET_MAGIC
from sqp.exceptions.sqp_exceptions import (
    FileFormatException,
    InvalidInputException,
    ShapeMismatchException,
)
from sqp.models.audio import LogMelSpectrogram
from sqp.models.dataset import PESQ_LABEL_RANGE, DatasetHeader, SampleRecord

log = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIQIIff")
VERSION_PLAIN = 1
VERSION_WITH_CLIP_IDS = 2


def _record_dtype(n_frames: int, n_mels: int, with_clip_ids: bool) -> np.dtype:
    fields = [("spec", "<f4", (n_frames * n_mels,)), ("label", "<f4")]
    if with_clip_ids:
        fields.append(("clip_id", "<u4"))
    return np.dtype(fields)


def _check_labels(labels: np.ndarray, label_range: Tuple[float, float], what: str):
    low, high = np.float32(label_range[0]), np.float32(label_range[1])
    outside = np.flatnonzero((labels < low) | (labels > high))
    if outside.size:
        raise InvalidInputException(
            error_description=f"{what}: label {float(labels[outside[0]])} of record "
            f"{int(outside[0])} outside [{float(low)}, {float(high)}]"
        )


def write_dataset(
    path: str,
    records: Sequence[SampleRecord],
    label_range: Tuple[float, float] = PESQ_LABEL_RANGE,
) -> DatasetHeader:
    n_frames, n_mels = records[0].shape if records else (0, 0)
    for index, record in enumerate(records):
        if record.shape != (n_frames, n_mels):
            raise ShapeMismatchException(
                expected=(n_frames, n_mels), actual=record.shape, what=f"record {index}"
            )
    with_clip_ids = bool(records) and all(r.clip_id is not None for r in records)
    version = VERSION_WITH_CLIP_IDS if with_clip_ids else VERSION_PLAIN

    payload = np.zeros(len(records), dtype=_record_dtype(n_frames, n_mels, with_clip_ids))
    for index, record in enumerate(records):
        payload["spec"][index] = record.spec.frames.reshape(-1)
        payload["label"][index] = record.label
        if with_clip_ids:
            payload["clip_id"][index] = record.clip_id
    _check_labels(payload["label"], label_range, path)

    header = DatasetHeader(
        version=version,
        count=len(records),
        n_frames=n_frames,
        n_mels=n_mels,
        label_min=label_range[0],
        label_max=label_range[1],
    )
    with open(path, "wb") as file:
        file.write(
            _HEADER.pack(
                DATASET_MAGIC,
                header.version,
                header.count,
                header.n_frames,
                header.n_mels,
                header.label_min,
                header.label_max,
            )
        )
        file.write(payload.tobytes())
    log.info("Wrote %d records (%dx%d) to %s", len(records), n_frames, n_mels, path)
    return header


def read_header(path: str, payload: bytes) -> DatasetHeader:
    if len(payload) < _HEADER.size:
        raise FileFormatException(path=path, error_description="truncated header")
    magic, version, count, n_frames, n_mels, label_min, label_max = _HEADER.unpack_from(
        payload
    )
    if magic != DATASET_MAGIC:
        raise FileFormatException(path=path, error_description=f"bad magic {magic!r}")
    if version not in (VERSION_PLAIN, VERSION_WITH_CLIP_IDS):
        raise FileFormatException(
            path=path, error_description=f"unsupported version {version}"
        )
    return DatasetHeader(
        version=version,
        count=count,
        n_frames=n_frames,
        n_mels=n_mels,
        label_min=label_min,
        label_max=label_max,
    )


def read_dataset(path: str) -> List[SampleRecord]:
    with open(path, "rb") as file:
        payload = file.read()
    header = read_header(path, payload)
    dtype = _record_dtype(
        header.n_frames, header.n_mels, header.version == VERSION_WITH_CLIP_IDS
    )
    body = payload[_HEADER.size :]
    if len(body) != header.count * dtype.itemsize:
        raise FileFormatException(
            path=path,
            error_description=f"payload holds {len(body)} bytes, header announces "
            f"{header.count} records of {dtype.itemsize} bytes",
        )
    if header.count == 0:
        return []
    table = np.frombuffer(body, dtype=dtype, count=header.count)
    _check_labels(table["label"], (header.label_min, header.label_max), path)

    records = []
    for row in table:
        frames = row["spec"].reshape(header.n_frames, header.n_mels)
        if not np.all(np.isfinite(frames)):
            raise FileFormatException(path=path, error_description="non-finite spectrogram")
        records.append(
            SampleRecord(
                spec=LogMelSpectrogram(frames=frames),
                label=float(row["label"]),
                clip_id=int(row["clip_id"]) if "clip_id" in dtype.names else None,
            )
        )
    log.debug("Read %d records from %s", len(records), path)
    return records
