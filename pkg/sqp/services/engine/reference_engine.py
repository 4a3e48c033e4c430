import abc
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from sqp.models.engine import EngineConfig
from sqp.models.enums import EngineKind
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.services.model.dnsmos import predict, prepare_input


class InferenceEngine(abc.ABC):
    def __init__(self, graph: ModelGraph, config: EngineConfig):
        self.graph = graph
        self.config = config

    @property
    def kind(self) -> EngineKind:
        return self.config.kind

    @abc.abstractmethod
    def infer(self, x: np.ndarray) -> float:
        """Prediction for one (H, W) spectrogram."""

    def infer_many(self, spectrograms: Sequence[np.ndarray]) -> np.ndarray:
        """Inputs are independent; results keep the input order."""
        if self.config.threads > 1 and len(spectrograms) > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
                return np.array(list(executor.map(self.infer, spectrograms)))
        return np.array([self.infer(x) for x in spectrograms])

    def _single_input(self, x) -> np.ndarray:
        return prepare_input(self.graph, x, np.float64)[0, ..., 0]


class Fp32ReferenceEngine(InferenceEngine):
    """The dense model-graph forward in eval mode."""

    def __init__(self, graph: ModelGraph, weights: WeightSet, config: EngineConfig):
        super().__init__(graph, config)
        weights.check_against(graph)
        self.weights = weights

    def infer(self, x: np.ndarray) -> float:
        return predict(self.graph, self.weights, x)
