from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(default=128, ge=1)
    micro_batch_size: int = Field(default=8, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    max_epochs: int = Field(default=400, ge=1)
    adam_beta1: float = Field(default=0.9, gt=0, lt=1)
    adam_beta2: float = Field(default=0.999, gt=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    plateau_patience: int = Field(default=5, ge=1)
    plateau_factor: float = Field(default=0.9, gt=0, lt=1)
    early_stop_patience: int = Field(default=25, ge=1)
    surrogate_beta: float = Field(default=5.0, gt=0)
    seed: int = 0


class SurrogateSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(default=5.0, gt=0)


class AdamState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    first_moment: Dict[str, np.ndarray]
    second_moment: Dict[str, np.ndarray]
    step: int = 0
