from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Waveform(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    sample_rate_hz: int = Field(gt=0)
    clip_id: Optional[int] = None

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float32(cls, value) -> np.ndarray:
        samples = np.array(value, dtype=np.float32).reshape(-1)
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        samples.setflags(write=False)
        return samples

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


class MelFilterbank(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sample_rate_hz: int
    n_fft: int
    n_mels: int
    f_min_hz: float
    f_max_hz: float
    weights: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "MelFilterbank":
        expected = (self.n_mels, self.n_fft // 2 + 1)
        if self.weights.shape != expected:
            raise ValueError(f"weights must be {expected}, got {self.weights.shape}")
        if np.any(self.weights < 0):
            raise ValueError("filterbank weights must be non-negative")
        if not np.all(self.weights.max(axis=1) > 0):
            raise ValueError("every mel filter needs at least one positive weight")
        self.weights.setflags(write=False)
        return self


class LogMelSpectrogram(BaseModel):
    """T x n_mels log10 Mel power frames."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: np.ndarray
    win_ms: float = 40.0
    hop_ms: float = 20.0

    @field_validator("frames", mode="before")
    @classmethod
    def _as_float32(cls, value) -> np.ndarray:
        frames = np.array(value, dtype=np.float32)
        if frames.ndim != 2:
            raise ValueError(f"frames must be T x n_mels, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("spectrogram values must be finite")
        frames.setflags(write=False)
        return frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_mels(self) -> int:
        return self.frames.shape[1]
