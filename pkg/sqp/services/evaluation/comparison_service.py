import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from sqp.exceptions.sqp_exceptions import InvalidInputException, TrainingDivergedException
from sqp.models.dataset import SampleRecord
from sqp.models.engine import EngineConfig
from sqp.models.enums import ComparisonArm, EngineKind, ModelVariant
from sqp.models.evaluation import ComparisonConfig
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.reports import ComparisonReport, VariantResult
from sqp.models.training import TrainConfig
from sqp.services.dataset.dataset_service import stack_records
from sqp.services.dataset.split import calibration_subset, split
from sqp.services.engine.engine_factory import EngineFactory
from sqp.services.evaluation.metrics import mse, pcc
from sqp.services.model.dnsmos import build_dnsmos, build_graph, predict_batched
from sqp.services.quantization.calibrator import Calibrator, quantize_model
from sqp.services.report_service import ReportService
from sqp.services.training.trainer import Trainer
from sqp.storage.csv_files import (
    write_comparison_csv,
    write_comparison_runs_csv,
    write_pairs_csv,
)

log = logging.getLogger(__name__)

AGREEMENT_FILE = "agreement_bam_vs_baseline.csv"


class SeedOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    predictions: Dict[ComparisonArm, np.ndarray] = {}
    notes: List[str] = []
    aborted: bool = False
    engine_config: Optional[EngineConfig] = None


class ComparisonService:
    def __init__(
        self,
        trainer: Trainer,
        calibrator: Calibrator,
        engine_factory: EngineFactory,
        report_service: ReportService,
    ):
        self._trainer = trainer
        self._calibrator = calibrator
        self._engine_factory = engine_factory
        self._report_service = report_service

    def run_comparison(
        self,
        records: Sequence[SampleRecord],
        cfg: ComparisonConfig,
        out_dir: Optional[str] = None,
        test_set: Optional[Sequence[SampleRecord]] = None,
    ) -> ComparisonReport:
        """
        Trains the baseline and BAM models once per seed and scores every arm
        on the same test split. Arms whose training aborted are left out and
        the report is flagged incomplete.
        """
        if test_set is None:
            rest, test_set = split(records, cfg.test_fraction, cfg.split_seed)
        else:
            rest = list(records)
        train, val = split(rest, cfg.val_fraction, cfg.split_seed)
        x_test, y_test = stack_records(test_set)
        log.info(
            "Comparing on %d train / %d val / %d test samples, seeds %s",
            len(train),
            len(val),
            len(test_set),
            cfg.seeds,
        )

        def run(seed: int) -> SeedOutcome:
            return self._run_seed(seed, train, val, x_test, cfg)

        if cfg.threads > 1 and len(cfg.seeds) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
                outcomes = list(executor.map(run, cfg.seeds))
        else:
            outcomes = [run(seed) for seed in cfg.seeds]

        report = self._aggregate(outcomes, y_test, cfg)
        if not report.complete:
            log.warning("Comparison incomplete: %s", "; ".join(report.notes))
        if out_dir is not None:
            self._write(out_dir, report, outcomes, y_test)
        return report

    def _train(
        self,
        variant: ModelVariant,
        shape: Tuple[int, int],
        train: Sequence[SampleRecord],
        val: Sequence[SampleRecord],
        train_cfg: TrainConfig,
        outcome: SeedOutcome,
    ) -> Optional[Tuple[ModelGraph, WeightSet]]:
        graph, weights = build_dnsmos(variant, shape, train_cfg.surrogate_beta, seed=train_cfg.seed)
        try:
            weights, history = self._trainer.train(graph, weights, train, val, train_cfg)
        except TrainingDivergedException as exception:
            outcome.aborted = True
            outcome.notes.append(
                f"seed {outcome.seed}: {variant.value} training aborted at epoch {exception.epoch}"
            )
            return None
        log.info(
            "seed %d: %s trained, best epoch %s, val_mse %s",
            outcome.seed,
            variant.value,
            history.best_epoch,
            history.best_val_mse,
        )
        return graph, weights

    def _int8_predictions(
        self,
        graph: ModelGraph,
        weights: WeightSet,
        calibration: Sequence[SampleRecord],
        engine_config: EngineConfig,
        x_test: np.ndarray,
    ) -> Tuple[np.ndarray, EngineConfig]:
        table = self._calibrator.calibrate(graph, weights, calibration)
        model = quantize_model(graph, weights, table)
        engine = self._engine_factory.create(graph, weights, model, engine_config)
        return engine.infer_many(list(x_test)), engine.config

    def _run_seed(
        self,
        seed: int,
        train: Sequence[SampleRecord],
        val: Sequence[SampleRecord],
        x_test: np.ndarray,
        cfg: ComparisonConfig,
    ) -> SeedOutcome:
        outcome = SeedOutcome(seed=seed)
        train_cfg = cfg.train.model_copy(update={"seed": seed})
        shape = tuple(x_test.shape[1:])
        calibration = calibration_subset(train, cfg.calibration_fraction, seed)
        predictions = outcome.predictions

        baseline = self._train(ModelVariant.BASELINE, shape, train, val, train_cfg, outcome)
        if baseline is not None:
            graph, weights = baseline
            predictions[ComparisonArm.BASELINE] = predict_batched(graph, weights, x_test)
            # post-training binarization: Heaviside convs and global average pooling
            binarized = build_graph(ModelVariant.BAM, shape, train_cfg.surrogate_beta)
            predictions[ComparisonArm.PTQ_BINARIZED] = predict_batched(binarized, weights, x_test)
            if cfg.include_full_int8:
                predictions[ComparisonArm.FULL_INT8], _ = self._int8_predictions(
                    graph,
                    weights,
                    calibration,
                    cfg.engine.model_copy(update={"kind": EngineKind.INT8_DENSE}),
                    x_test,
                )

        bam = self._train(ModelVariant.BAM, shape, train, val, train_cfg, outcome)
        if bam is not None:
            graph, weights = bam
            predictions[ComparisonArm.BAM_QAT] = predict_batched(graph, weights, x_test)
            (
                predictions[ComparisonArm.BAM_QAT_INT8],
                outcome.engine_config,
            ) = self._int8_predictions(
                graph,
                weights,
                calibration,
                cfg.engine.model_copy(update={"kind": EngineKind.BAM_INT8}),
                x_test,
            )

        if cfg.include_binary_weights:
            binary = self._train(
                ModelVariant.BAM_BINARY_WEIGHTS, shape, train, val, train_cfg, outcome
            )
            if binary is not None:
                graph, weights = binary
                predictions[ComparisonArm.BAM_BINARY_WEIGHTS] = predict_batched(
                    graph, weights, x_test
                )
        return outcome

    @staticmethod
    def _score(
        arm: ComparisonArm,
        seed: int,
        predictions: np.ndarray,
        targets: np.ndarray,
        notes: List[str],
    ) -> Tuple[float, float]:
        try:
            correlation = pcc(predictions, targets)
        except InvalidInputException:
            # constant predictions carry no correlation
            correlation = 0.0
            notes.append(f"seed {seed}: {arm.value} predictions are constant, PCC set to 0")
        return correlation, mse(predictions, targets)

    def _aggregate(
        self, outcomes: Sequence[SeedOutcome], y_test: np.ndarray, cfg: ComparisonConfig
    ) -> ComparisonReport:
        notes = [note for outcome in outcomes for note in outcome.notes]
        results = []
        for arm in ComparisonArm:
            seeds, pccs, mses = [], [], []
            for outcome in outcomes:
                if arm not in outcome.predictions:
                    continue
                correlation, error = self._score(
                    arm, outcome.seed, outcome.predictions[arm], y_test, notes
                )
                seeds.append(outcome.seed)
                pccs.append(correlation)
                mses.append(error)
            if seeds:
                result = VariantResult(
                    variant=arm.value, seeds=seeds, pcc_per_seed=pccs, mse_per_seed=mses
                )
                log.info("%s: PCC %.3f, MSE %.4f", arm.value, result.pcc_mean, result.mse_mean)
                results.append(result)

        engine_config = next(
            (outcome.engine_config for outcome in outcomes if outcome.engine_config), None
        )
        return ComparisonReport(
            results=results,
            seeds=list(cfg.seeds),
            n_test=len(y_test),
            complete=not any(outcome.aborted for outcome in outcomes),
            notes=notes,
            engine_config=(
                {key: str(getattr(value, "value", value)) for key, value in engine_config}
                if engine_config
                else {}
            ),
        )

    def _write(
        self,
        out_dir: str,
        report: ComparisonReport,
        outcomes: Sequence[SeedOutcome],
        y_test: np.ndarray,
    ) -> None:
        os.makedirs(out_dir, exist_ok=True)
        write_comparison_csv(os.path.join(out_dir, "comparison.csv"), report)
        write_comparison_runs_csv(os.path.join(out_dir, "comparison_runs.csv"), report)
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as file:
            file.write(self._report_service.comparison_summary(report))

        for arm in ComparisonArm:
            first = next((o for o in outcomes if arm in o.predictions), None)
            if first is not None:
                write_pairs_csv(
                    os.path.join(out_dir, f"scatter_{arm.value}.csv"),
                    ("target", "prediction"),
                    y_test,
                    first.predictions[arm],
                )
        paired = next(
            (
                o
                for o in outcomes
                if ComparisonArm.BASELINE in o.predictions
                and ComparisonArm.BAM_QAT in o.predictions
            ),
            None,
        )
        if paired is not None:
            write_pairs_csv(
                os.path.join(out_dir, AGREEMENT_FILE),
                ("baseline", "bam"),
                paired.predictions[ComparisonArm.BASELINE],
                paired.predictions[ComparisonArm.BAM_QAT],
            )
        log.info("Wrote comparison report to %s", out_dir)
