from pydantic import BaseModel, ConfigDict, Field

from sqp.models.enums import ConvBackend, EngineKind, WeightPrecision


class EngineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: EngineKind = EngineKind.BAM_INT8
    backend: ConvBackend = ConvBackend.MASKED
    dense_head: WeightPrecision = WeightPrecision.FP32
    threads: int = Field(default=1, ge=1)

    @property
    def conv_precision(self) -> WeightPrecision:
        if self.kind in (EngineKind.BAM_INT8, EngineKind.INT8_DENSE):
            return WeightPrecision.INT8
        return WeightPrecision.FP32
