from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from sqp.models.engine import EngineConfig
from sqp.models.training import TrainConfig


class ComparisonConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seeds: List[int] = [0, 1, 2, 3]
    split_seed: int = 0
    val_fraction: float = Field(default=0.05, gt=0, lt=1)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    calibration_fraction: float = Field(default=0.2, gt=0, le=1)
    include_binary_weights: bool = False
    include_full_int8: bool = False
    threads: int = Field(default=1, ge=1)
    train: TrainConfig = TrainConfig()
    engine: EngineConfig = EngineConfig()

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value
