import csv
import logging
import os
from typing import List, Sequence, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import (
    EmptyInputException,
    FileFormatException,
    InvalidInputException,
    ShapeMismatchException,
)
from sqp.models.audio import LogMelSpectrogram
from sqp.models.dataset import SampleRecord
from sqp.services.audio.frontend_service import FrontendService, frame_segments
from sqp.services.dataset.split import calibration_subset, split
from sqp.storage.dataset_file import read_dataset, write_dataset
from sqp.storage.wav_file import load_wav

log = logging.getLogger(__name__)


def read_label_csv(path: str) -> List[Tuple[str, float]]:
    with open(path, newline="", encoding="utf-8") as file:
        reader = csv.DictReader(file)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise FileFormatException(
                path=path, error_description="expected columns path,label"
            )
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                rows.append((row["path"], float(row["label"])))
            except (TypeError, ValueError) as exception:
                raise FileFormatException(
                    path=path, error_description=f"bad label on line {line}"
                ) from exception
    return rows


class DatasetService:
    def __init__(
        self,
        frontend_service: FrontendService,
        segment_s: float,
        stride_s: float,
        val_fraction: float,
        calibration_fraction: float,
    ):
        self._frontend_service = frontend_service
        self._segment_s = segment_s
        self._stride_s = stride_s
        self._val_fraction = val_fraction
        self._calibration_fraction = calibration_fraction

    def load(self, path: str) -> List[SampleRecord]:
        return read_dataset(path)

    def save(self, path: str, records: Sequence[SampleRecord]) -> None:
        write_dataset(path, records)

    def split(
        self, records: Sequence[SampleRecord], seed: int, val_fraction=None
    ) -> Tuple[List[SampleRecord], List[SampleRecord]]:
        return split(
            records,
            self._val_fraction if val_fraction is None else val_fraction,
            seed,
        )

    def calibration_subset(
        self, records: Sequence[SampleRecord], seed: int, fraction=None
    ) -> List[SampleRecord]:
        return calibration_subset(
            records,
            self._calibration_fraction if fraction is None else fraction,
            seed,
        )

    def from_wav(
        self, wav_dir: str, labels_csv: str, segment_s=None, stride_s=None
    ) -> List[SampleRecord]:
        """Every full segment of a clip inherits the clip's label and id."""
        segment_s = self._segment_s if segment_s is None else segment_s
        stride_s = self._stride_s if stride_s is None else stride_s
        records = []
        for clip_id, (relative_path, label) in enumerate(read_label_csv(labels_csv)):
            waveform = load_wav(os.path.join(wav_dir, relative_path))
            segments = frame_segments(
                waveform.model_copy(update={"clip_id": clip_id}), segment_s, stride_s
            )
            if not segments:
                log.warning(
                    "%s is shorter than one %.1f s segment, skipped",
                    relative_path,
                    segment_s,
                )
            for segment in segments:
                records.append(
                    SampleRecord(
                        spec=self._frontend_service.spectrogram(segment),
                        label=label,
                        clip_id=clip_id,
                    )
                )
        log.info("Built %d segments from %s", len(records), labels_csv)
        return records

    def spectrograms_from_wav(
        self, path: str, segment_s=None, stride_s=None
    ) -> List[LogMelSpectrogram]:
        segments = frame_segments(
            load_wav(path),
            self._segment_s if segment_s is None else segment_s,
            self._stride_s if stride_s is None else stride_s,
        )
        if not segments:
            raise InvalidInputException(
                error_description=f"{path} is shorter than one segment"
            )
        return [self._frontend_service.spectrogram(segment) for segment in segments]


def stack_records(records: Sequence[SampleRecord]) -> Tuple[np.ndarray, np.ndarray]:
    """(N, T, n_mels) float32 spectrograms and (N,) float32 labels."""
    if not records:
        raise EmptyInputException(error_description="No records")
    shapes = {record.shape for record in records}
    if len(shapes) != 1:
        raise ShapeMismatchException(
            expected=records[0].shape, actual=sorted(shapes), what="record set"
        )
    spectrograms = np.stack([record.spec.frames for record in records])
    labels = np.array([record.label for record in records], dtype=np.float32)
    return spectrograms, labels
