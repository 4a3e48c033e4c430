import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import (
    EmptyInputException,
    FileFormatException,
    InvalidInputException,
    ShapeMismatchException,
)
from sqp.models.audio import Waveform
from sqp.services.dataset.dataset_service import DatasetService, read_label_csv, stack_records
from sqp.storage.wav_file import write_wav
from tests.conftest import make_records


@pytest.fixture
def dataset_service(frontend_service) -> DatasetService:
    return DatasetService(
        frontend_service, segment_s=1.0, stride_s=0.5, val_fraction=0.25, calibration_fraction=0.5
    )


def _write_noise(path, seconds, seed):
    samples = 0.1 * np.random.default_rng(seed).standard_normal(int(seconds * 16000))
    write_wav(str(path), Waveform(samples=samples, sample_rate_hz=16000))


def test_from_wav_segments_inherit_label_and_clip(tmp_path, dataset_service):
    _write_noise(tmp_path / "a.wav", 2.0, 0)
    _write_noise(tmp_path / "b.wav", 1.2, 1)
    _write_noise(tmp_path / "short.wav", 0.5, 2)
    labels = tmp_path / "labels.csv"
    labels.write_text("path,label\na.wav,3.5\nb.wav,1.25\nshort.wav,2.0\n", encoding="utf-8")

    records = dataset_service.from_wav(str(tmp_path), str(labels))
    assert [r.clip_id for r in records] == [0, 0, 0, 1]
    assert [r.label for r in records] == [3.5, 3.5, 3.5, 1.25]
    assert all(r.shape == (49, 120) for r in records)


def test_from_wav_output_splits_per_clip(tmp_path, dataset_service):
    for index in range(4):
        _write_noise(tmp_path / f"{index}.wav", 2.0, index)
    labels = tmp_path / "labels.csv"
    labels.write_text(
        "path,label\n" + "".join(f"{index}.wav,{index}\n" for index in range(4)),
        encoding="utf-8",
    )
    records = dataset_service.from_wav(str(tmp_path), str(labels))
    train, val = dataset_service.split(records, seed=0)
    assert {r.clip_id for r in train}.isdisjoint({r.clip_id for r in val})


def test_spectrograms_from_wav(tmp_path, dataset_service):
    _write_noise(tmp_path / "a.wav", 2.0, 0)
    assert len(dataset_service.spectrograms_from_wav(str(tmp_path / "a.wav"))) == 3
    _write_noise(tmp_path / "b.wav", 0.5, 0)
    with pytest.raises(InvalidInputException, match="shorter than one segment"):
        dataset_service.spectrograms_from_wav(str(tmp_path / "b.wav"))


def test_label_csv_needs_columns(tmp_path):
    labels = tmp_path / "labels.csv"
    labels.write_text("file,score\na.wav,1\n", encoding="utf-8")
    with pytest.raises(FileFormatException, match="expected columns"):
        read_label_csv(str(labels))
    labels.write_text("path,label\na.wav,good\n", encoding="utf-8")
    with pytest.raises(FileFormatException, match="line 2"):
        read_label_csv(str(labels))


def test_save_and_load(tmp_path, dataset_service):
    records = make_records(3, shape=(4, 5))
    dataset_service.save(str(tmp_path / "x.sqpd"), records)
    loaded = dataset_service.load(str(tmp_path / "x.sqpd"))
    np.testing.assert_array_equal(loaded[2].spec.frames, records[2].spec.frames)


def test_stack_records():
    records = make_records(3, shape=(4, 5))
    spectrograms, labels = stack_records(records)
    assert spectrograms.shape == (3, 4, 5) and spectrograms.dtype == np.float32
    assert labels.tolist() == [np.float32(r.label) for r in records]
    with pytest.raises(EmptyInputException):
        stack_records([])
    with pytest.raises(ShapeMismatchException):
        stack_records(records + make_records(1, shape=(5, 5)))
