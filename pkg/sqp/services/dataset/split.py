import logging
from typing import List, Sequence, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import EmptyInputException, InvalidInputException
from sqp.models.dataset import SampleRecord

log = logging.getLogger(__name__)


def _check_fraction(name: str, fraction: float) -> None:
    if not 0.0 < fraction < 1.0:
        raise InvalidInputException(
            error_description=f"{name} must lie strictly between 0 and 1, got {fraction}"
        )


def _held_out_count(n_units: int, fraction: float) -> int:
    return min(max(1, int(round(fraction * n_units))), n_units - 1)


def split(
    records: Sequence[SampleRecord], val_fraction: float = 0.05, seed: int = 0
) -> Tuple[List[SampleRecord], List[SampleRecord]]:
    """
    Partition into (train, val). Records sharing a clip id always land on the
    same side. Both partitions keep the input order.
    """
    _check_fraction("val_fraction", val_fraction)
    if len(records) < 2:
        raise InvalidInputException(
            error_description=f"Need at least 2 records to split, got {len(records)}"
        )
    rng = np.random.default_rng(seed)

    clip_ids = [r.clip_id for r in records]
    unique_clips = sorted({c for c in clip_ids if c is not None})
    if None not in clip_ids and len(unique_clips) >= 2:
        n_val = _held_out_count(len(unique_clips), val_fraction)
        chosen = rng.permutation(len(unique_clips))[:n_val]
        val_clips = {unique_clips[i] for i in chosen}
        in_val = [c in val_clips for c in clip_ids]
        log.info("Split %d clips: %d held out", len(unique_clips), n_val)
    else:
        if unique_clips:
            log.warning("Clip ids incomplete or single clip, splitting per record")
        n_val = _held_out_count(len(records), val_fraction)
        chosen_set = set(rng.permutation(len(records))[:n_val].tolist())
        in_val = [i in chosen_set for i in range(len(records))]

    train = [r for r, v in zip(records, in_val) if not v]
    val = [r for r, v in zip(records, in_val) if v]
    log.info("Split %d records into %d train / %d val", len(records), len(train), len(val))
    return train, val


def calibration_subset(
    records: Sequence[SampleRecord], fraction: float = 0.2, seed: int = 0
) -> List[SampleRecord]:
    if not records:
        raise EmptyInputException(error_description="No records to calibrate on")
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputException(
            error_description=f"calibration fraction must lie in (0, 1], got {fraction}"
        )
    count = min(len(records), max(1, int(round(fraction * len(records)))))
    chosen = np.sort(np.random.default_rng(seed).permutation(len(records))[:count])
    return [records[i] for i in chosen]
