import struct

import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import FileFormatException
from sqp.models.audio import Waveform
from sqp.storage.wav_file import load_wav, write_wav


def test_write_then_load_is_exact_on_pcm16_grid(tmp_path):
    samples = np.arange(-32768, 32768, 97, dtype=np.float64) / 32768.0
    path = str(tmp_path / "grid.wav")
    write_wav(path, Waveform(samples=samples, sample_rate_hz=16000))
    loaded = load_wav(path)
    assert loaded.sample_rate_hz == 16000
    np.testing.assert_array_equal(loaded.samples, samples.astype(np.float32))


def test_samples_outside_full_scale_are_clipped(tmp_path):
    path = str(tmp_path / "loud.wav")
    write_wav(path, Waveform(samples=[2.0, -2.0], sample_rate_hz=8000))
    np.testing.assert_array_equal(load_wav(path).samples, [32767 / 32768.0, -1.0])


def test_extra_chunks_are_skipped(tmp_path):
    path = str(tmp_path / "list.wav")
    data = np.array([0, 1000, -1000], dtype="<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
    body = b"WAVE" + b"LIST" + struct.pack("<I", 3) + b"abc\x00"
    body += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    with open(path, "wb") as file:
        file.write(b"RIFF" + struct.pack("<I", len(body)) + body)
    np.testing.assert_allclose(load_wav(path).samples, [0.0, 1000 / 32768.0, -1000 / 32768.0])


@pytest.mark.parametrize(
    "payload, message",
    [
        (b"RIFX0000WAVE", "not a RIFF/WAVE"),
        (b"RIFF\x04\x00\x00\x00WAVE", "missing fmt or data"),
    ],
)
def test_malformed_files(tmp_path, payload, message):
    path = str(tmp_path / "bad.wav")
    with open(path, "wb") as file:
        file.write(payload)
    with pytest.raises(FileFormatException, match=message):
        load_wav(path)


def test_stereo_is_rejected(tmp_path):
    path = str(tmp_path / "stereo.wav")
    fmt = struct.pack("<HHIIHH", 1, 2, 16000, 64000, 4, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", 4)
    body += b"\x00" * 4
    with open(path, "wb") as file:
        file.write(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(FileFormatException, match="expected mono"):
        load_wav(path)
