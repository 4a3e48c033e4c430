import csv
import os

import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import TrainingDivergedException
from sqp.models.engine import EngineConfig
from sqp.models.enums import ComparisonArm, ModelVariant
from sqp.models.evaluation import ComparisonConfig
from sqp.models.reports import TrainingHistory
from sqp.models.training import TrainConfig
from sqp.services.engine.engine_factory import EngineFactory
from sqp.services.evaluation.comparison_service import ComparisonService
from sqp.services.quantization.calibrator import Calibrator
from sqp.services.report_service import ReportService
from sqp.services.training.trainer import Trainer
from tests.conftest import make_records


def returns_initial_weights(graph, weights, train, val, cfg):
    return weights, TrainingHistory(best_epoch=1)


@pytest.fixture
def trainer(mocker):
    fake = mocker.Mock(spec=Trainer)
    fake.train.side_effect = returns_initial_weights
    return fake


@pytest.fixture
def service(trainer):
    return ComparisonService(
        trainer, Calibrator(histogram_bins=64), EngineFactory(EngineConfig()), ReportService()
    )


@pytest.fixture
def records():
    return make_records(40)


def config(**updates):
    return ComparisonConfig(seeds=[0, 1], train=TrainConfig(max_epochs=1)).model_copy(
        update=updates
    )


def test_every_arm_is_scored_on_the_same_test_split(service, trainer, records):
    report = service.run_comparison(records, config())
    assert [result.variant for result in report.results] == [
        ComparisonArm.BASELINE.value,
        ComparisonArm.PTQ_BINARIZED.value,
        ComparisonArm.BAM_QAT.value,
        ComparisonArm.BAM_QAT_INT8.value,
    ]
    assert report.n_test == 8
    assert report.complete
    assert report.engine_config["kind"] == "bam-int8"
    for result in report.results:
        assert result.seeds == [0, 1]
        assert result.pcc_std is not None
        assert -1.0 <= result.pcc_mean <= 1.0
    seeds_seen = [call.args[4].seed for call in trainer.train.call_args_list]
    assert seeds_seen == [0, 0, 1, 1]
    variants = [call.args[0].variant for call in trainer.train.call_args_list]
    assert variants == [ModelVariant.BASELINE, ModelVariant.BAM] * 2


def test_optional_arms(service, records):
    report = service.run_comparison(
        records, config(seeds=[3], include_binary_weights=True, include_full_int8=True)
    )
    variants = {result.variant for result in report.results}
    assert {"bam-binary-weights", "full-int8"} <= variants
    for result in report.results:
        assert result.pcc_std is None


def test_aborted_training_marks_the_report_incomplete(service, trainer, records):
    def diverge_bam(graph, weights, train, val, cfg):
        if graph.variant == ModelVariant.BAM and cfg.seed == 1:
            raise TrainingDivergedException(
                epoch=4, history=TrainingHistory(diverged=True), best_weights=weights
            )
        return weights, TrainingHistory(best_epoch=1)

    trainer.train.side_effect = diverge_bam
    report = service.run_comparison(records, config())
    assert not report.complete
    assert report.result("bam-qat").seeds == [0]
    assert report.result("baseline").seeds == [0, 1]
    assert any("aborted at epoch 4" in note for note in report.notes)



def test_exploding_gradients_mark_the_report_incomplete(service, trainer, records):
    exploding = Trainer(TrainConfig(batch_size=4, micro_batch_size=4, max_epochs=3, lr=1e30))

    def explode_bam(graph, weights, train, val, cfg):
        if graph.variant == ModelVariant.BAM:
            return exploding.train(graph, weights, train, val)
        return weights, TrainingHistory(best_epoch=1)

    trainer.train.side_effect = explode_bam
    report = service.run_comparison(records, config(seeds=[0]))
    assert not report.complete
    assert {result.variant for result in report.results} == {"baseline", "ptq-binarized"}
    assert any("bam training aborted" in note for note in report.notes)

def test_threads_do_not_change_the_result(service, records):
    serial = service.run_comparison(records, config())
    threaded = service.run_comparison(records, config(threads=2))
    assert serial == threaded


def test_explicit_test_set(service, records):
    report = service.run_comparison(records[:30], config(seeds=[0]), test_set=records[30:])
    assert report.n_test == 10


def test_output_files(service, records, tmp_path):
    out_dir = str(tmp_path / "out")
    report = service.run_comparison(records, config(), out_dir=out_dir)
    files = set(os.listdir(out_dir))
    assert {"comparison.csv", "comparison_runs.csv", "summary.txt"} <= files
    assert "scatter_bam-qat-int8.csv" in files
    assert "agreement_bam_vs_baseline.csv" in files
    with open(os.path.join(out_dir, "comparison_runs.csv"), encoding="utf-8") as file:
        rows = list(csv.DictReader(file))
    assert len(rows) == 2 * len(report.results)
    with open(os.path.join(out_dir, "scatter_baseline.csv"), encoding="utf-8") as file:
        pairs = list(csv.reader(file))
    assert pairs[0] == ["target", "prediction"] and len(pairs) == 9
    with open(os.path.join(out_dir, "summary.txt"), encoding="utf-8") as file:
        summary = file.read()
    assert "8 test samples" in summary and "bam-qat-int8" in summary


def test_constant_predictions_score_zero(service):
    notes = []
    correlation, error = service._score(  # pylint: disable=protected-access
        ComparisonArm.PTQ_BINARIZED, 0, np.full(4, 2.0), np.arange(4.0), notes
    )
    assert correlation == 0.0
    assert error == pytest.approx(np.mean((2.0 - np.arange(4.0)) ** 2))
    assert "constant" in notes[0]
