import argparse
import logging
import sys
from configparser import ConfigParser
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from sqp.constants import FULL_INPUT_SHAPE
from sqp.dependency_injection.config import as_dict, get_config
from sqp.dependency_injection.container import Container
from sqp.dependency_injection.services import Services
from sqp.exceptions.sqp_exceptions import MissingQuantParamsException, SQPBaseException
from sqp.misc.utils import as_bool, as_int_list, file_sha256, resolve_seed
from sqp.models.audio import LogMelSpectrogram
from sqp.models.dataset import SampleRecord
from sqp.models.engine import EngineConfig
from sqp.models.enums import (
    ConvBackend,
    EngineKind,
    LabelFunction,
    ModelVariant,
    SnrDistribution,
    WeightPrecision,
)
from sqp.models.model_graph import ModelGraph, WeightSet
from sqp.models.quantized_model import QuantizedModel
from sqp.services.dataset.dataset_service import stack_records
from sqp.services.engine.bam_engine import count_engine_multiplies
from sqp.services.model.dnsmos import build_dnsmos, build_graph, count_layer_costs
from sqp.services.quantization.calibrator import quantize_model
from sqp.storage.checkpoint_file import Checkpoint, read_checkpoint, write_checkpoint
from sqp.storage.csv_files import write_benchmark_csv, write_history_csv, write_rows

log = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, Services], int]

MEMREPORT_VARIANTS = ("baseline", "bam-int8")
BENCH_INPUTS = 4


class UsageError(Exception):
    pass


def _updated(model: BaseModel, **updates) -> BaseModel:
    """Validated copy; None leaves a field as configured."""
    values = model.model_dump()
    values.update({key: value for key, value in updates.items() if value is not None})
    return type(model).model_validate(values)


def _global_parser(add_help: bool) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqp",
        add_help=add_help,
        description="Binary activation maps for speech quality prediction",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--config", default="sqp.conf", help="INI configuration file")
    parser.add_argument("--loglevel", default=None, help="overrides [app] loglevel")
    parser.add_argument("--seed", type=int, default=None, help="overrides SQP_SEED and [app] seed")
    parser.add_argument("--threads", type=int, default=None, help="overrides [app] threads")
    return parser


def _shape_arg(sub: argparse.ArgumentParser, default=None) -> None:
    sub.add_argument(
        "--input-shape",
        nargs=2,
        type=int,
        metavar=("H", "W"),
        default=default,
        help="spectrogram frames and mel bands",
    )


def _dense_head_arg(sub: argparse.ArgumentParser, config: ConfigParser) -> None:
    sub.add_argument(
        "--dense-head",
        choices=[p.value for p in WeightPrecision],
        default=config.get("engine", "dense_head"),
        help="precision of the BAM engine's dense layers",
    )


def build_parser(config: ConfigParser) -> argparse.ArgumentParser:
    parser = _global_parser(add_help=True)
    commands = parser.add_subparsers(dest="command", required=True)
    formatter = argparse.ArgumentDefaultsHelpFormatter

    dataset = commands.add_parser("dataset", help="build and split datasets")
    dataset_commands = dataset.add_subparsers(dest="dataset_command", required=True)

    synth = dataset_commands.add_parser(
        "synth", help="synthetic speech-in-noise dataset", formatter_class=formatter
    )
    synth.add_argument(
        "--n", type=int, default=config.getint("synth", "n_samples"), help="number of records"
    )
    synth.add_argument("--out", required=True)
    synth.add_argument(
        "--segment-seconds",
        type=float,
        default=config.getfloat("synth", "segment_s"),
        help="clip length",
    )
    synth.add_argument(
        "--snr-distribution",
        choices=[d.value for d in SnrDistribution],
        default=config.get("synth", "snr_distribution"),
        help="how SNRs are drawn",
    )
    synth.add_argument(
        "--snr-min", type=float, default=config.getfloat("synth", "snr_min_db"), help="dB"
    )
    synth.add_argument(
        "--snr-max", type=float, default=config.getfloat("synth", "snr_max_db"), help="dB"
    )
    synth.add_argument(
        "--n-harmonics",
        type=int,
        default=config.getint("synth", "n_harmonics"),
        help="partials of the speech-like tone",
    )
    synth.add_argument(
        "--label-fn",
        choices=[fn.value for fn in LabelFunction],
        default=config.get("synth", "label_fn"),
        help="mapping from SNR to quality label",
    )
    synth.set_defaults(handler=_dataset_synth)

    split = dataset_commands.add_parser(
        "split", help="train/validation split", formatter_class=formatter
    )
    split.add_argument("--in", dest="input", required=True)
    split.add_argument("--out-train", required=True)
    split.add_argument("--out-val", required=True)
    split.add_argument(
        "--val-fraction",
        type=float,
        default=config.getfloat("evaluation", "val_fraction"),
        help="share of clips held out",
    )
    split.set_defaults(handler=_dataset_split)

    from_wav = dataset_commands.add_parser(
        "from-wav", help="labelled WAV clips to a dataset", formatter_class=formatter
    )
    from_wav.add_argument("--wav-dir", required=True)
    from_wav.add_argument("--labels", required=True, help="CSV with path,label columns")
    from_wav.add_argument("--out", required=True)
    from_wav.add_argument(
        "--segment-seconds",
        type=float,
        default=config.getfloat("frontend", "segment_s"),
        help="segment length",
    )
    from_wav.add_argument(
        "--stride-seconds",
        type=float,
        default=config.getfloat("frontend", "stride_s"),
        help="hop between segments",
    )
    from_wav.set_defaults(handler=_dataset_from_wav)

    train = commands.add_parser("train", help="train a model", formatter_class=formatter)
    train.add_argument("--train", required=True)
    train.add_argument("--val", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--history", default=None, help="per-epoch CSV")
    train.add_argument(
        "--variant",
        choices=[v.value for v in ModelVariant],
        default=ModelVariant.BAM.value,
        help="model variant",
    )
    train.add_argument(
        "--beta",
        type=float,
        default=config.getfloat("train", "surrogate_beta"),
        help="surrogate gradient steepness",
    )
    train.add_argument(
        "--beta-grid",
        type=float,
        nargs="+",
        default=None,
        help="train once per value and keep the best on validation",
    )
    train.add_argument(
        "--batch-size",
        type=int,
        default=config.getint("train", "batch_size"),
        help="samples per optimizer step",
    )
    train.add_argument(
        "--micro-batch-size",
        type=int,
        default=config.getint("train", "micro_batch_size"),
        help="samples per forward pass",
    )
    train.add_argument(
        "--lr", type=float, default=config.getfloat("train", "lr"), help="Adam learning rate"
    )
    train.add_argument(
        "--adam-beta1",
        type=float,
        default=config.getfloat("train", "adam_beta1"),
        help="Adam first moment decay",
    )
    train.add_argument(
        "--adam-beta2",
        type=float,
        default=config.getfloat("train", "adam_beta2"),
        help="Adam second moment decay",
    )
    train.add_argument(
        "--adam-eps",
        type=float,
        default=config.getfloat("train", "adam_eps"),
        help="Adam denominator floor",
    )
    train.add_argument(
        "--epochs", type=int, default=config.getint("train", "max_epochs"), help="epoch cap"
    )
    train.add_argument(
        "--plateau-patience",
        type=int,
        default=config.getint("train", "plateau_patience"),
        help="epochs without improvement before the learning rate decays",
    )
    train.add_argument(
        "--plateau-factor",
        type=float,
        default=config.getfloat("train", "plateau_factor"),
        help="learning rate decay factor",
    )
    train.add_argument(
        "--early-stop",
        type=int,
        default=config.getint("train", "early_stop_patience"),
        help="epochs without improvement before training stops",
    )
    train.set_defaults(handler=_train)

    calibrate = commands.add_parser(
        "calibrate", help="activation and weight ranges", formatter_class=formatter
    )
    calibrate.add_argument("--weights", required=True)
    calibrate.add_argument("--data", required=True)
    calibrate.add_argument("--out", required=True)
    calibrate.add_argument(
        "--fraction",
        type=float,
        default=config.getfloat("quantizer", "calibration_fraction"),
        help="share of the data used for calibration",
    )
    calibrate.set_defaults(handler=_calibrate)

    quantize = commands.add_parser(
        "quantize", help="int8 weights from a calibrated checkpoint", formatter_class=formatter
    )
    quantize.add_argument("--weights", required=True)
    quantize.add_argument("--out", required=True)
    quantize.set_defaults(handler=_quantize)

    infer = commands.add_parser("infer", help="predict quality", formatter_class=formatter)
    infer.add_argument("--weights", required=True)
    source = infer.add_mutually_exclusive_group(required=True)
    source.add_argument("--wav")
    source.add_argument("--data")
    infer.add_argument(
        "--engine",
        choices=[k.value for k in EngineKind],
        default=None,
        help="picked from the checkpoint when omitted",
    )
    infer.add_argument(
        "--backend",
        choices=[b.value for b in ConvBackend],
        default=config.get("engine", "backend"),
        help="binary conv kernel",
    )
    _dense_head_arg(infer, config)
    infer.add_argument("--out", default=None, help="prediction CSV")
    infer.set_defaults(handler=_infer)

    bench = commands.add_parser("bench", help="latency of the engines", formatter_class=formatter)
    bench.add_argument("--weights", default=None, help="random weights when omitted")
    bench.add_argument(
        "--runs", type=int, default=config.getint("bench", "runs"), help="timed runs"
    )
    bench.add_argument(
        "--warmup", type=int, default=config.getint("bench", "warmup"), help="untimed runs"
    )
    bench.add_argument(
        "--backend",
        choices=[b.value for b in ConvBackend],
        default=config.get("engine", "backend"),
        help="binary conv kernel",
    )
    _dense_head_arg(bench, config)
    _shape_arg(bench, list(FULL_INPUT_SHAPE))
    bench.add_argument("--out", required=True)
    bench.set_defaults(handler=_bench)

    memreport = commands.add_parser(
        "memreport", help="activation memory of one inference", formatter_class=formatter
    )
    memreport.add_argument(
        "--variant", choices=MEMREPORT_VARIANTS, default="bam-int8", help="model to report"
    )
    _shape_arg(memreport, list(FULL_INPUT_SHAPE))
    memreport.set_defaults(handler=_memreport)

    compare = commands.add_parser(
        "compare", help="quantization comparison over seeds", formatter_class=formatter
    )
    compare.add_argument("--data", required=True)
    compare.add_argument("--out-dir", required=True)
    compare.add_argument("--test", default=None, help="fixed test set instead of a split")
    compare.add_argument(
        "--seeds",
        type=int,
        nargs="+",
        default=as_int_list(config.get("evaluation", "seeds")),
        help="one training run per seed",
    )
    compare.add_argument(
        "--epochs", type=int, default=config.getint("train", "max_epochs"), help="epoch cap"
    )
    compare.add_argument(
        "--include-binary-weights",
        action="store_true",
        default=as_bool(config.get("evaluation", "include_binary_weights")),
        help="also train the binary-weight variant",
    )
    compare.add_argument(
        "--include-full-int8",
        action="store_true",
        default=as_bool(config.get("evaluation", "include_full_int8")),
        help="also score the whole baseline in int8",
    )
    _dense_head_arg(compare, config)
    compare.set_defaults(handler=_compare)
    return parser


def _setup_logging(level_name: str) -> None:
    loglevel = logging.getLevelName(level_name.upper())
    if isinstance(loglevel, str):
        raise ValueError(f"Invalid loglevel {level_name.upper()}")
    logging.basicConfig(
        level=loglevel,
        datefmt="%m/%d/%Y %I:%M:%S %p",
    )


def _container(config: ConfigParser, args: argparse.Namespace) -> Container:
    values = as_dict(config)
    values["app"]["seed"] = str(resolve_seed(args.seed, values["app"].get("seed")))
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        values["app"]["threads"] = str(args.threads)
        values["engine"]["threads"] = str(args.threads)
    container = Container()
    container.config.from_dict(values)
    return container


def _seed(services: Services) -> int:
    return services.train_config().seed


def _dataset_synth(args: argparse.Namespace, services: Services) -> int:
    cfg = _updated(
        services.synth_config(),
        n_samples=args.n,
        segment_s=args.segment_seconds,
        snr_distribution=args.snr_distribution,
        snr_min_db=args.snr_min,
        snr_max_db=args.snr_max,
        n_harmonics=args.n_harmonics,
        label_fn=args.label_fn,
    )
    records = services.synth_service().generate(cfg)
    services.dataset_service().save(args.out, records)
    print(f"wrote {len(records)} records to {args.out}, sha256 {file_sha256(args.out)}")
    return 0


def _dataset_split(args: argparse.Namespace, services: Services) -> int:
    dataset_service = services.dataset_service()
    records = dataset_service.load(args.input)
    train, val = dataset_service.split(records, _seed(services), args.val_fraction)
    dataset_service.save(args.out_train, train)
    dataset_service.save(args.out_val, val)
    print(f"train {len(train)} -> {args.out_train}, val {len(val)} -> {args.out_val}")
    return 0


def _dataset_from_wav(args: argparse.Namespace, services: Services) -> int:
    dataset_service = services.dataset_service()
    records = dataset_service.from_wav(
        args.wav_dir, args.labels, args.segment_seconds, args.stride_seconds
    )
    dataset_service.save(args.out, records)
    print(f"wrote {len(records)} records to {args.out}, sha256 {file_sha256(args.out)}")
    return 0


def _train(args: argparse.Namespace, services: Services) -> int:
    variant = ModelVariant(args.variant)
    if args.beta_grid and variant == ModelVariant.BASELINE:
        raise UsageError("--beta-grid needs a BAM variant")
    cfg = _updated(
        services.train_config(),
        batch_size=args.batch_size,
        micro_batch_size=args.micro_batch_size,
        lr=args.lr,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
        adam_eps=args.adam_eps,
        max_epochs=args.epochs,
        plateau_patience=args.plateau_patience,
        plateau_factor=args.plateau_factor,
        early_stop_patience=args.early_stop,
        surrogate_beta=args.beta,
    )
    dataset_service = services.dataset_service()
    trainer = services.trainer()
    train = dataset_service.load(args.train)
    val = dataset_service.load(args.val)

    if args.beta_grid:
        result = trainer.beta_search(train, val, args.beta_grid, cfg)
        for beta, val_mse in result.val_mse.items():
            print(f"beta {beta:g}: val_mse {val_mse:.5f}")
        print(f"best beta {result.best_beta:g}")
        cfg = cfg.model_copy(update={"surrogate_beta": result.best_beta})

    graph, weights = build_dnsmos(variant, train[0].shape, cfg.surrogate_beta, seed=cfg.seed)
    weights, history = trainer.train(graph, weights, train, val, cfg)
    write_checkpoint(args.out, Checkpoint(graph=graph, weights=weights))
    if args.history:
        write_history_csv(args.history, history)
    print(
        f"best epoch {history.best_epoch} val_mse {history.best_val_mse:.5f}, "
        f"weights written to {args.out}"
    )
    return 0


def _calibrate(args: argparse.Namespace, services: Services) -> int:
    checkpoint = read_checkpoint(args.weights)
    dataset_service = services.dataset_service()
    records = dataset_service.calibration_subset(
        dataset_service.load(args.data), _seed(services), args.fraction
    )
    table = services.calibrator().calibrate(checkpoint.graph, checkpoint.weights, records)
    write_checkpoint(
        args.out, Checkpoint(graph=checkpoint.graph, weights=checkpoint.weights, table=table)
    )
    print(f"calibrated on {len(records)} records, written to {args.out}")
    return 0


def _quantize(args: argparse.Namespace, services: Services) -> int:
    checkpoint = read_checkpoint(args.weights)
    if checkpoint.table is None:
        raise MissingQuantParamsException(
            layer_names=[layer.name for layer in checkpoint.graph.parametric_layers]
        )
    quantized = quantize_model(checkpoint.graph, checkpoint.weights, checkpoint.table)
    write_checkpoint(
        args.out,
        Checkpoint(graph=checkpoint.graph, weights=checkpoint.weights, quantized=quantized),
    )
    print(f"int8 model written to {args.out}")
    return 0


def default_engine_kind(graph: ModelGraph, quantized: Optional[QuantizedModel]) -> EngineKind:
    if graph.variant == ModelVariant.BASELINE:
        return EngineKind.INT8_DENSE if quantized else EngineKind.FP32_REFERENCE
    return EngineKind.BAM_INT8 if quantized else EngineKind.BAM_FP32


def _infer(args: argparse.Namespace, services: Services) -> int:
    checkpoint = read_checkpoint(args.weights)
    kind = (
        EngineKind(args.engine)
        if args.engine
        else default_engine_kind(checkpoint.graph, checkpoint.quantized)
    )
    config = _updated(
        services.engine_config(), kind=kind, backend=args.backend, dense_head=args.dense_head
    )
    engine = services.engine_factory().create(
        checkpoint.graph, checkpoint.weights, checkpoint.quantized, config
    )

    labels: Optional[np.ndarray] = None
    if args.wav:
        spectrograms = [
            spec.frames for spec in services.dataset_service().spectrograms_from_wav(args.wav)
        ]
    else:
        stacked, labels = stack_records(services.dataset_service().load(args.data))
        spectrograms = list(stacked)
    predictions = engine.infer_many(spectrograms)

    header = ("index", "prediction") if labels is None else ("index", "prediction", "label")
    rows = [
        (index, repr(float(value)))
        if labels is None
        else (index, repr(float(value)), repr(float(labels[index])))
        for index, value in enumerate(predictions)
    ]
    if args.out:
        write_rows(args.out, header, rows)
    else:
        for row in rows:
            print(",".join(str(value) for value in row))
    if args.wav:
        print(f"mean prediction {float(np.mean(predictions)):.4f} over {len(predictions)} segments")
    return 0


def _random_records(shape, count: int, rng: np.random.Generator) -> List[SampleRecord]:
    return [
        SampleRecord(spec=LogMelSpectrogram(frames=rng.normal(size=shape)), label=0.0)
        for _ in range(count)
    ]


def _bench_models(args: argparse.Namespace, seed: int, beta: float):
    shape = tuple(args.input_shape)
    baseline = build_dnsmos(ModelVariant.BASELINE, shape, beta, seed=seed)
    bam = build_dnsmos(ModelVariant.BAM, shape, beta, seed=seed)
    if args.weights:
        checkpoint = read_checkpoint(args.weights)
        loaded = (checkpoint.graph, checkpoint.weights)
        if checkpoint.graph.variant == ModelVariant.BASELINE:
            baseline = loaded
        elif checkpoint.graph.variant == ModelVariant.BAM:
            bam = loaded
        else:
            raise UsageError("bench takes a baseline or bam checkpoint")
    if baseline[0].input_shape != bam[0].input_shape:
        raise UsageError("checkpoint input shape differs from --input-shape")
    return baseline, bam


def _bench(args: argparse.Namespace, services: Services) -> int:
    seed = _seed(services)
    engine_config: EngineConfig = _updated(
        services.engine_config(), backend=args.backend, dense_head=args.dense_head
    )
    (base_graph, base_weights), (bam_graph, bam_weights) = _bench_models(
        args, seed, services.train_config().surrogate_beta
    )
    rng = np.random.default_rng(seed)
    calibration = _random_records(base_graph.input_shape, 8, rng)
    inputs = [
        record.spec.frames
        for record in _random_records(base_graph.input_shape, BENCH_INPUTS, rng)
    ]

    calibrator = services.calibrator()
    factory = services.engine_factory()

    def quantized(graph: ModelGraph, weights: WeightSet) -> QuantizedModel:
        return quantize_model(graph, weights, calibrator.calibrate(graph, weights, calibration))

    engines = [
        factory.create(
            base_graph,
            base_weights,
            config=engine_config.model_copy(update={"kind": EngineKind.FP32_REFERENCE}),
        ),
        factory.create(
            base_graph,
            base_weights,
            quantized(base_graph, base_weights),
            engine_config.model_copy(update={"kind": EngineKind.INT8_DENSE}),
        ),
        factory.create(
            bam_graph,
            bam_weights,
            quantized(bam_graph, bam_weights),
            engine_config.model_copy(update={"kind": EngineKind.BAM_INT8}),
        ),
    ]
    summaries = services.benchmark_service().run(engines, inputs, args.runs, args.warmup)
    write_benchmark_csv(args.out, summaries)
    reference = summaries[0].median_us
    for summary in summaries:
        print(
            f"{summary.engine.value:16s} median {summary.median_us:12.1f} us  "
            f"MAD {summary.mad_us:10.1f} us  "
            f"time saved {100.0 * (1.0 - summary.median_us / reference):6.1f} %"
        )
    return 0


def _memreport(args: argparse.Namespace, services: Services) -> int:
    shape = tuple(args.input_shape)
    report = services.memory_service().report(shape)
    multiplies = None
    if args.variant == "bam-int8":
        multiplies = count_engine_multiplies(build_graph(ModelVariant.BAM, shape))
    counts = count_layer_costs(build_graph(ModelVariant.BASELINE, shape))
    print(
        services.report_service().memory_report(report, args.variant, counts, multiplies),
        end="",
    )
    return 0


def _compare(args: argparse.Namespace, services: Services) -> int:
    cfg = services.comparison_config()
    cfg = _updated(
        cfg,
        seeds=args.seeds,
        include_binary_weights=args.include_binary_weights,
        include_full_int8=args.include_full_int8,
        train=_updated(cfg.train, max_epochs=args.epochs),
        engine=_updated(cfg.engine, dense_head=args.dense_head),
    )
    dataset_service = services.dataset_service()
    records = dataset_service.load(args.data)
    test_set = dataset_service.load(args.test) if args.test else None
    report = services.comparison_service().run_comparison(records, cfg, args.out_dir, test_set)
    print(services.report_service().comparison_summary(report), end="")
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Exit code 0 on success, 1 on a runtime failure, 2 on invalid usage."""
    argv = list(sys.argv[1:] if argv is None else argv)
    known, _ = _global_parser(add_help=False).parse_known_args(argv)
    config = get_config(known.config)
    try:
        parser = build_parser(config)
    except ValueError as exception:
        print(f"error: invalid configuration in {known.config}: {exception}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)

    try:
        try:
            _setup_logging(args.loglevel or config.get("app", "loglevel"))
            services = _container(config, args).services
        except (UsageError, ValueError) as exception:
            parser.error(str(exception))
        handler: Handler = args.handler
        return handler(args, services)
    except (UsageError, ValidationError) as exception:
        parser.error(str(exception))
    except SQPBaseException as exception:
        log.error("%s: %s", exception.error, exception)
        print(f"error: {exception.error_description}", file=sys.stderr)
        return exception.exit_code
    except OSError as exception:
        log.error("I/O failure: %s", exception)
        print(f"error: {exception}", file=sys.stderr)
        return 1
    return 1
