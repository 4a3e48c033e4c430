# pylint: disable=c-extension-no-member, too-few-public-methods
from dependency_injector import containers, providers

from sqp.misc.utils import as_bool, as_int_list, as_optional_float
from sqp.models.dataset import SynthConfig
from sqp.models.engine import EngineConfig
from sqp.models.enums import ConvBackend, LabelFunction, SnrDistribution, WeightPrecision
from sqp.models.evaluation import ComparisonConfig
from sqp.models.training import TrainConfig
from sqp.services.audio.frontend_service import FrontendService
from sqp.services.dataset.dataset_service import DatasetService
from sqp.services.dataset.synth_service import SynthService
from sqp.services.engine.benchmark_service import BenchmarkService
from sqp.services.engine.engine_factory import EngineFactory
from sqp.services.engine.memory_service import MemoryService
from sqp.services.evaluation.comparison_service import ComparisonService
from sqp.services.quantization.calibrator import Calibrator
from sqp.services.report_service import ReportService
from sqp.services.training.trainer import Trainer


class Services(containers.DeclarativeContainer):
    config = providers.Configuration()

    train_config = providers.Factory(
        TrainConfig,
        batch_size=config.train.batch_size.as_int(),
        micro_batch_size=config.train.micro_batch_size.as_int(),
        lr=config.train.lr.as_float(),
        max_epochs=config.train.max_epochs.as_int(),
        adam_beta1=config.train.adam_beta1.as_float(),
        adam_beta2=config.train.adam_beta2.as_float(),
        adam_eps=config.train.adam_eps.as_float(),
        plateau_patience=config.train.plateau_patience.as_int(),
        plateau_factor=config.train.plateau_factor.as_float(),
        early_stop_patience=config.train.early_stop_patience.as_int(),
        surrogate_beta=config.train.surrogate_beta.as_float(),
        seed=config.app.seed.as_int(),
    )

    synth_config = providers.Factory(
        SynthConfig,
        n_samples=config.synth.n_samples.as_int(),
        rng_seed=config.app.seed.as_int(),
        segment_s=config.synth.segment_s.as_float(),
        sample_rate_hz=config.frontend.sample_rate_hz.as_int(),
        snr_min_db=config.synth.snr_min_db.as_float(),
        snr_max_db=config.synth.snr_max_db.as_float(),
        snr_distribution=config.synth.snr_distribution.as_(SnrDistribution),
        label_fn=config.synth.label_fn.as_(LabelFunction),
        n_harmonics=config.synth.n_harmonics.as_int(),
    )

    engine_config = providers.Factory(
        EngineConfig,
        backend=config.engine.backend.as_(ConvBackend),
        dense_head=config.engine.dense_head.as_(WeightPrecision),
        threads=config.engine.threads.as_int(),
    )

    comparison_config = providers.Factory(
        ComparisonConfig,
        seeds=config.evaluation.seeds.as_(as_int_list),
        split_seed=config.app.seed.as_int(),
        val_fraction=config.evaluation.val_fraction.as_float(),
        test_fraction=config.evaluation.test_fraction.as_float(),
        calibration_fraction=config.quantizer.calibration_fraction.as_float(),
        include_binary_weights=config.evaluation.include_binary_weights.as_(as_bool),
        include_full_int8=config.evaluation.include_full_int8.as_(as_bool),
        threads=config.app.threads.as_int(),
        train=train_config,
        engine=engine_config,
    )

    frontend_service = providers.Singleton(
        FrontendService,
        sample_rate_hz=config.frontend.sample_rate_hz.as_int(),
        n_fft=config.frontend.n_fft.as_int(),
        n_mels=config.frontend.n_mels.as_int(),
        f_min_hz=config.frontend.f_min_hz.as_float(),
        f_max_hz=config.frontend.f_max_hz.as_(as_optional_float),
        win_ms=config.frontend.win_ms.as_float(),
        hop_ms=config.frontend.hop_ms.as_float(),
    )

    dataset_service = providers.Singleton(
        DatasetService,
        frontend_service=frontend_service,
        segment_s=config.frontend.segment_s.as_float(),
        stride_s=config.frontend.stride_s.as_float(),
        val_fraction=config.evaluation.val_fraction.as_float(),
        calibration_fraction=config.quantizer.calibration_fraction.as_float(),
    )

    synth_service = providers.Singleton(SynthService, frontend_service=frontend_service)

    trainer = providers.Singleton(Trainer, train_config=train_config)

    calibrator = providers.Singleton(
        Calibrator,
        histogram_bins=config.quantizer.histogram_bins.as_int(),
        batch_size=config.quantizer.batch_size.as_int(),
    )

    engine_factory = providers.Singleton(EngineFactory, default_config=engine_config)

    memory_service = providers.Singleton(MemoryService)

    benchmark_service = providers.Singleton(
        BenchmarkService,
        runs=config.bench.runs.as_int(),
        warmup=config.bench.warmup.as_int(),
    )

    report_service = providers.Singleton(ReportService)

    comparison_service = providers.Singleton(
        ComparisonService,
        trainer=trainer,
        calibrator=calibrator,
        engine_factory=engine_factory,
        report_service=report_service,
    )
