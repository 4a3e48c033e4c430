from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from sqp.models.enums import EngineKind


class LayerCount(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    output_shape: Tuple[int, ...]
    params: int = 0
    macs: int = 0
    activations: int = 0


class LayerCostTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: List[LayerCount]

    @property
    def total_params(self) -> int:
        return sum(row.params for row in self.rows)

    @property
    def total_macs(self) -> int:
        return sum(row.macs for row in self.rows)

    @property
    def total_activations(self) -> int:
        return sum(row.activations for row in self.rows)

    def row(self, name: str) -> LayerCount:
        return next(row for row in self.rows if row.name == name)


class EpochRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int
    lr: float
    train_mse: float
    val_mse: float


class TrainingHistory(BaseModel):
    epochs: List[EpochRecord] = []
    best_epoch: Optional[int] = None
    stopped_early: bool = False
    diverged: bool = False

    @property
    def best_val_mse(self) -> Optional[float]:
        if self.best_epoch is None:
            return None
        return self.epochs[self.best_epoch - 1].val_mse


class BetaSearchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    val_mse: Dict[float, float]
    best_beta: float


class LayerMemory(BaseModel):
    model_config = ConfigDict(frozen=True)

    layer: str
    activations: int
    bytes_fp32: int
    bits_packed: int


class MemoryReport(BaseModel):
    """Activation memory of one inference: 4 bytes per value vs 1 bit per BAM value."""

    model_config = ConfigDict(frozen=True)

    layers: List[LayerMemory]
    input_shape: Tuple[int, int]
    activation_count: int
    input_elements: int
    baseline_bytes: int
    packed_activation_bytes: int
    packed_input_bytes: int

    @property
    def packed_bytes(self) -> int:
        return self.packed_activation_bytes + self.packed_input_bytes

    @property
    def ratio(self) -> float:
        return self.baseline_bytes / self.packed_bytes

    @property
    def baseline_mb(self) -> float:
        return self.baseline_bytes / 1e6

    @property
    def packed_mb(self) -> float:
        return self.packed_bytes / 1e6


class MultiplyCount(BaseModel):
    model_config = ConfigDict(frozen=True)

    real_multiplies: int
    replaced_by_additions: int

    @property
    def total(self) -> int:
        return self.real_multiplies + self.replaced_by_additions


class BenchmarkSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    engine: EngineKind
    runs: int = Field(ge=1)
    median_us: float
    mad_us: float
    latencies_us: List[float]


class VariantResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: str
    seeds: List[int]
    pcc_per_seed: List[float]
    mse_per_seed: List[float]

    @staticmethod
    def _mean(values: List[float]) -> float:
        return float(np.mean(values))

    @staticmethod
    def _std(values: List[float]) -> Optional[float]:
        return float(np.std(values, ddof=1)) if len(values) >= 2 else None

    @property
    def pcc_mean(self) -> float:
        return self._mean(self.pcc_per_seed)

    @property
    def pcc_std(self) -> Optional[float]:
        return self._std(self.pcc_per_seed)

    @property
    def mse_mean(self) -> float:
        return self._mean(self.mse_per_seed)

    @property
    def mse_std(self) -> Optional[float]:
        return self._std(self.mse_per_seed)


class ComparisonReport(BaseModel):
    results: List[VariantResult] = []
    seeds: List[int] = []
    n_test: int = 0
    complete: bool = True
    notes: List[str] = []
    engine_config: Dict[str, str] = {}

    def result(self, variant: str) -> VariantResult:
        return next(result for result in self.results if result.variant == variant)
