import csv
import logging
from typing import Iterable, Sequence

from sqp.models.reports import BenchmarkSummary, ComparisonReport, TrainingHistory

log = logging.getLogger(__name__)


def write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.debug("Wrote %s", path)


def write_history_csv(path: str, history: TrainingHistory) -> None:
    write_rows(
        path,
        ("epoch", "lr", "train_mse", "val_mse"),
        (
            (r.epoch, repr(r.lr), repr(r.train_mse), repr(r.val_mse))
            for r in history.epochs
        ),
    )


def write_benchmark_csv(path: str, summaries: Sequence[BenchmarkSummary]) -> None:
    write_rows(
        path,
        ("engine", "run", "latency_us"),
        (
            (summary.engine.value, run, f"{latency:.3f}")
            for summary in summaries
            for run, latency in enumerate(summary.latencies_us)
        ),
    )


def write_pairs_csv(
    path: str, header: Sequence[str], first: Sequence[float], second: Sequence[float]
) -> None:
    write_rows(path, header, ((repr(float(a)), repr(float(b))) for a, b in zip(first, second)))


def _optional(value) -> str:
    return "" if value is None else repr(value)


def write_comparison_csv(path: str, report: ComparisonReport) -> None:
    write_rows(
        path,
        ("variant", "n_seeds", "pcc_mean", "pcc_std", "mse_mean", "mse_std"),
        (
            (
                result.variant,
                len(result.seeds),
                repr(result.pcc_mean),
                _optional(result.pcc_std),
                repr(result.mse_mean),
                _optional(result.mse_std),
            )
            for result in report.results
        ),
    )


def write_comparison_runs_csv(path: str, report: ComparisonReport) -> None:
    write_rows(
        path,
        ("variant", "seed", "pcc", "mse"),
        (
            (result.variant, seed, repr(pcc), repr(mse))
            for result in report.results
            for seed, pcc, mse in zip(result.seeds, result.pcc_per_seed, result.mse_per_seed)
        ),
    )
