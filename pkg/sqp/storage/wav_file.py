import logging
import struct
from typing import Dict

import numpy as np

from sqp.exceptions.sqp_exceptions import FileFormatException
from sqp.models.audio import Waveform

log = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 1
PCM16_SCALE = 32768.0


def _chunks(path: str, payload: bytes) -> Dict[bytes, bytes]:
    chunks: Dict[bytes, bytes] = {}
    offset = 12
    while offset + 8 <= len(payload):
        chunk_id, chunk_size = struct.unpack_from("<4sI", payload, offset)
        body = payload[offset + 8 : offset + 8 + chunk_size]
        if len(body) != chunk_size:
            raise FileFormatException(
                path=path, error_description=f"truncated {chunk_id!r} chunk"
            )
        chunks.setdefault(chunk_id, body)
        # chunks are word aligned
        offset += 8 + chunk_size + (chunk_size & 1)
    return chunks


def load_wav(path: str) -> Waveform:
    with open(path, "rb") as file:
        payload = file.read()
    if len(payload) < 12 or payload[:4] != b"RIFF" or payload[8:12] != b"WAVE":
        raise FileFormatException(path=path, error_description="not a RIFF/WAVE file")

    chunks = _chunks(path, payload)
    if b"fmt " not in chunks or b"data" not in chunks:
        raise FileFormatException(
            path=path, error_description="missing fmt or data chunk"
        )
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise FileFormatException(path=path, error_description="short fmt chunk")
    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from(
        "<HHIIHH", fmt
    )
    if audio_format != WAVE_FORMAT_PCM or bits != 16:
        raise FileFormatException(
            path=path,
            error_description=f"expected PCM 16-bit, got format {audio_format} "
            f"with {bits} bits",
        )
    if channels != 1:
        raise FileFormatException(
            path=path, error_description=f"expected mono, got {channels} channels"
        )
    data = chunks[b"data"]
    if len(data) % 2:
        raise FileFormatException(path=path, error_description="odd data size")

    samples = np.frombuffer(data, dtype="<i2").astype(np.float32) / PCM16_SCALE
    log.debug("Loaded %s: %d samples at %d Hz", path, len(samples), sample_rate)
    return Waveform(samples=samples, sample_rate_hz=sample_rate)


def write_wav(path: str, waveform: Waveform) -> None:
    """Write PCM16 mono. Samples are scaled by 32768 and clipped to int16."""
    scaled = np.round(waveform.samples.astype(np.float64) * PCM16_SCALE)
    data = np.clip(scaled, -32768, 32767).astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        WAVE_FORMAT_PCM,
        1,
        waveform.sample_rate_hz,
        waveform.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(data),
    )
    with open(path, "wb") as file:
        file.write(header + data)
