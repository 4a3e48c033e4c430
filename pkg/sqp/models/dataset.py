from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sqp.models.audio import LogMelSpectrogram
from sqp.models.enums import LabelFunction, SnrDistribution

PESQ_LABEL_RANGE = (-0.5, 4.5)


class SampleRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    spec: LogMelSpectrogram
    label: float
    clip_id: Optional[int] = None

    @field_validator("label")
    @classmethod
    def _as_float32(cls, value: float) -> float:
        label = float(np.float32(value))
        if not np.isfinite(label):
            raise ValueError("label must be finite")
        return label

    @property
    def shape(self) -> Tuple[int, int]:
        return self.spec.n_frames, self.spec.n_mels


class DatasetHeader(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int
    count: int = Field(ge=0)
    n_frames: int = Field(ge=0)
    n_mels: int = Field(ge=0)
    label_min: float
    label_max: float

    @model_validator(mode="after")
    def _check(self) -> "DatasetHeader":
        if self.label_min > self.label_max:
            raise ValueError("label_min must not exceed label_max")
        return self


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_samples: int = Field(default=2000, ge=1)
    rng_seed: int = 0
    segment_s: float = Field(default=9.0, gt=0)
    sample_rate_hz: int = Field(default=16000, gt=0)
    snr_min_db: float = -5.0
    snr_max_db: float = 25.0
    snr_distribution: SnrDistribution = SnrDistribution.UNIFORM
    label_fn: LabelFunction = LabelFunction.SNR_SIGMOID
    n_harmonics: int = Field(default=8, ge=1)
    f0_min_hz: float = Field(default=100.0, gt=0)
    f0_max_hz: float = Field(default=250.0, gt=0)
    syllable_rate_hz: float = Field(default=4.0, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        if self.snr_min_db >= self.snr_max_db:
            raise ValueError("snr_min_db must be below snr_max_db")
        if self.f0_min_hz > self.f0_max_hz:
            raise ValueError("f0_min_hz must not exceed f0_max_hz")
        return self
