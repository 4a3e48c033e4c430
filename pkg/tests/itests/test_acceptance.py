import os

import pytest

from sqp.constants import DESK_INPUT_SHAPE
from sqp.dependency_injection.container import create_container
from sqp.models.evaluation import ComparisonConfig
from sqp.models.training import TrainConfig

TEST_CONFIG = os.path.join(os.path.dirname(os.path.dirname(__file__)), "sqp.test.conf")


@pytest.mark.slow
def test_desk_scale_comparison(tmp_path):
    """Synthetic speech in noise at 149x120 with two seeds."""
    services = create_container(TEST_CONFIG).services
    records = services.synth_service().generate(
        services.synth_config().model_copy(update={"n_samples": 2000, "segment_s": 3.0})
    )
    assert records[0].shape == DESK_INPUT_SHAPE
    cfg = ComparisonConfig(
        seeds=[0, 1],
        train=TrainConfig(batch_size=64, max_epochs=50, early_stop_patience=10),
    )
    report = services.comparison_service().run_comparison(records, cfg, str(tmp_path))
    assert report.complete

    baseline = report.result("baseline").pcc_mean
    binarized = report.result("ptq-binarized").pcc_mean
    bam = report.result("bam-qat").pcc_mean
    bam_int8 = report.result("bam-qat-int8").pcc_mean
    assert baseline >= 0.8
    assert binarized <= baseline - 0.15
    assert bam >= baseline - 0.05
    assert bam_int8 >= bam - 0.03
