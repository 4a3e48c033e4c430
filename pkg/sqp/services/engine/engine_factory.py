import logging
from typing import Optional

from sqp.exceptions.sqp_exceptions import ConfigurationException
from sqp.models.engine import EngineConfig
from sqp.models.enums import EngineKind
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.quantized_model import QuantizedModel
from sqp.services.engine.bam_engine import BamEngine
from sqp.services.engine.int8_engine import Int8DenseEngine
from sqp.services.engine.reference_engine import Fp32ReferenceEngine, InferenceEngine

log = logging.getLogger(__name__)


class EngineFactory:
    def __init__(self, default_config: EngineConfig):
        self._default_config = default_config

    @property
    def default_config(self) -> EngineConfig:
        return self._default_config

    def create(
        self,
        graph: ModelGraph,
        weights: WeightSet,
        quantized: Optional[QuantizedModel] = None,
        config: Optional[EngineConfig] = None,
    ) -> InferenceEngine:
        config = self._default_config if config is None else config
        log.debug("Creating %s engine (%s backend)", config.kind.value, config.backend.value)
        if config.kind == EngineKind.FP32_REFERENCE:
            return Fp32ReferenceEngine(graph, weights, config)
        if config.kind == EngineKind.INT8_DENSE:
            if quantized is None:
                raise ConfigurationException(
                    error_description="The int8-dense engine needs calibrated weights"
                )
            return Int8DenseEngine(quantized, config)
        return BamEngine(graph, weights, config, quantized)
