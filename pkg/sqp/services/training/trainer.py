import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import (
    EmptyInputException,
    NonFiniteGradientException,
    ShapeMismatchException,
    TrainingDivergedException,
)
from sqp.models.dataset import SampleRecord
from sqp.models.enums import ForwardMode, ModelVariant
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.reports import BetaSearchResult, EpochRecord, TrainingHistory
from sqp.models.training import SurrogateSpec, TrainConfig
from sqp.services.dataset.dataset_service import stack_records
from sqp.services.model.dnsmos import build_dnsmos, forward, predict_batched
from sqp.services.training.adam import adam_step, init_adam
from sqp.services.training.backward import backward
from sqp.services.training.losses import mse_grad, mse_loss
from sqp.services.training.schedule import PlateauSchedule

log = logging.getLogger(__name__)


def batch_gradients(
    graph: ModelGraph,
    weights: WeightSet,
    spectrograms: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Tuple[Dict[str, np.ndarray], float]:
    """
    Gradient of the batch MSE, summed over micro-batches in a fixed order.
    Returns the gradients and the summed squared error of the batch.
    """
    surrogate = SurrogateSpec(beta=cfg.surrogate_beta)
    count = len(labels)
    totals = {name: np.zeros_like(value) for name, value in weights.params.items()}
    squared_error = 0.0
    for start in range(0, count, cfg.micro_batch_size):
        stop = start + cfg.micro_batch_size
        predictions, cache = forward(
            graph, weights, spectrograms[start:stop], ForwardMode.TRAIN, rng
        )
        targets = labels[start:stop]
        squared_error += float(
            np.sum((predictions.astype(np.float64) - targets.astype(np.float64)) ** 2)
        )
        grads = backward(
            graph, weights, cache, mse_grad(predictions, targets, count), surrogate
        )
        for name, grad in grads.items():
            totals[name] += grad
    return totals, squared_error


class Trainer:
    def __init__(self, train_config: TrainConfig):
        self._train_config = train_config

    @property
    def config(self) -> TrainConfig:
        return self._train_config

    def train(
        self,
        graph: ModelGraph,
        weights: WeightSet,
        train_set: Sequence[SampleRecord],
        val_set: Sequence[SampleRecord],
        cfg: Optional[TrainConfig] = None,
    ) -> Tuple[WeightSet, TrainingHistory]:
        cfg = self._train_config if cfg is None else cfg
        if not train_set or not val_set:
            raise EmptyInputException(
                error_description="Training needs non-empty train and validation sets"
            )
        x_train, y_train = stack_records(train_set)
        x_val, y_val = stack_records(val_set)
        if tuple(x_train.shape[1:]) != tuple(graph.input_shape):
            raise ShapeMismatchException(
                expected=graph.input_shape, actual=x_train.shape[1:], what="training data"
            )
        weights.check_against(graph)
        graph = graph.model_copy(update={"beta": cfg.surrogate_beta})

        rng = np.random.default_rng(cfg.seed)
        schedule = PlateauSchedule(
            cfg.lr, cfg.plateau_patience, cfg.plateau_factor, cfg.early_stop_patience
        )
        state = init_adam(weights)
        history = TrainingHistory()
        best_weights = weights.copy()

        for epoch in range(1, cfg.max_epochs + 1):
            lr = schedule.lr
            order = rng.permutation(len(y_train))
            squared_error = 0.0
            try:
                for start in range(0, len(order), cfg.batch_size):
                    batch = order[start : start + cfg.batch_size]
                    grads, batch_error = batch_gradients(
                        graph, weights, x_train[batch], y_train[batch], cfg, rng
                    )
                    squared_error += batch_error
                    weights, state = adam_step(
                        weights, grads, state, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
                    )
            except NonFiniteGradientException as exception:
                history.diverged = True
                log.warning("Gradients diverged at epoch %d: %s", epoch, exception)
                raise TrainingDivergedException(
                    epoch=epoch, history=history, best_weights=best_weights
                ) from exception

            val_mse = self.evaluate(graph, weights, x_val, y_val)
            history.epochs.append(
                EpochRecord(
                    epoch=epoch,
                    lr=lr,
                    train_mse=squared_error / len(y_train),
                    val_mse=val_mse,
                )
            )
            log.info(
                "epoch %d lr %.6g train_mse %.5f val_mse %.5f",
                epoch,
                lr,
                squared_error / len(y_train),
                val_mse,
            )
            if not np.isfinite(val_mse):
                history.diverged = True
                log.warning("Validation loss diverged at epoch %d", epoch)
                raise TrainingDivergedException(
                    epoch=epoch, history=history, best_weights=best_weights
                )

            decision = schedule.step(val_mse)
            if decision.improved:
                history.best_epoch = epoch
                best_weights = weights.copy()
            if decision.lr_decayed:
                log.info("No improvement, learning rate now %.6g", schedule.lr)
            if decision.stop:
                history.stopped_early = True
                log.info("Early stop after epoch %d, best epoch %s", epoch, history.best_epoch)
                break

        return best_weights, history

    @staticmethod
    def evaluate(
        graph: ModelGraph, weights: WeightSet, spectrograms: np.ndarray, labels: np.ndarray
    ) -> float:
        predictions = predict_batched(graph, weights, spectrograms)
        if not np.all(np.isfinite(predictions)):
            return float("nan")
        return mse_loss(predictions, labels)

    def beta_search(
        self,
        train_set: Sequence[SampleRecord],
        val_set: Sequence[SampleRecord],
        betas: Sequence[float],
        cfg: Optional[TrainConfig] = None,
    ) -> BetaSearchResult:
        """Trains one BAM model per steepness value; the lowest val MSE wins."""
        cfg = self._train_config if cfg is None else cfg
        if not betas:
            raise EmptyInputException(error_description="No beta values to search")
        val_mse: Dict[float, float] = {}
        for beta in betas:
            beta_cfg = cfg.model_copy(update={"surrogate_beta": beta})
            graph, weights = build_dnsmos(
                ModelVariant.BAM, train_set[0].shape, beta, seed=cfg.seed
            )
            _, history = self.train(graph, weights, train_set, val_set, beta_cfg)
            val_mse[beta] = history.best_val_mse
            log.info("beta %.3g: best val_mse %.5f", beta, val_mse[beta])
        best_beta = min(val_mse, key=lambda beta: val_mse[beta])
        return BetaSearchResult(val_mse=val_mse, best_beta=best_beta)
