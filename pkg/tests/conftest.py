import numpy as np
import pytest

from sqp.models.audio import LogMelSpectrogram
from sqp.models.dataset import SampleRecord
from sqp.services.audio.frontend_service import FrontendService


@pytest.fixture
def frontend_service() -> FrontendService:
    return FrontendService(
        sample_rate_hz=16000,
        n_fft=1024,
        n_mels=120,
        f_min_hz=0.0,
        f_max_hz=None,
        win_ms=40.0,
        hop_ms=20.0,
    )


def make_records(count, shape=(16, 20), seed=0, clip_ids=None):
    """Random spectrogram records whose label depends on the mean energy."""
    rng = np.random.default_rng(seed)
    records = []
    for index in range(count):
        frames = rng.normal(size=shape).astype(np.float32)
        records.append(
            SampleRecord(
                spec=LogMelSpectrogram(frames=frames),
                label=float(np.clip(2.0 + frames.mean() * 4.0, -0.5, 4.5)),
                clip_id=None if clip_ids is None else clip_ids[index],
            )
        )
    return records


@pytest.fixture
def toy_records():
    return make_records(24)
