import pytest

from sqp.exceptions.sqp_exceptions import EmptyInputException, InvalidInputException
from sqp.services.dataset.split import calibration_subset, split
from tests.conftest import make_records


def test_split_sizes_and_order():
    records = make_records(40, shape=(2, 2))
    train, val = split(records, 0.05, seed=3)
    assert len(val) == 2 and len(train) == 38
    positions = {id(r): i for i, r in enumerate(records)}
    for part in (train, val):
        indices = [positions[id(r)] for r in part]
        assert indices == sorted(indices)
    assert {id(r) for r in train}.isdisjoint({id(r) for r in val})


def test_split_is_deterministic():
    records = make_records(30, shape=(2, 2))
    assert [id(r) for r in split(records, 0.2, 5)[1]] == [id(r) for r in split(records, 0.2, 5)[1]]


def test_both_partitions_are_never_empty():
    records = make_records(2, shape=(2, 2))
    for fraction in (0.01, 0.99):
        train, val = split(records, fraction, 0)
        assert len(train) == 1 and len(val) == 1


def test_segments_of_one_clip_stay_together():
    clip_ids = [i // 4 for i in range(40)]
    records = make_records(40, shape=(2, 2), clip_ids=clip_ids)
    train, val = split(records, 0.2, seed=1)
    train_clips = {r.clip_id for r in train}
    val_clips = {r.clip_id for r in val}
    assert train_clips.isdisjoint(val_clips)
    assert len(val_clips) == 2


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_invalid_fraction(fraction):
    with pytest.raises(InvalidInputException):
        split(make_records(10, shape=(2, 2)), fraction, 0)


def test_too_few_records():
    with pytest.raises(InvalidInputException, match="at least 2"):
        split(make_records(1, shape=(2, 2)), 0.5, 0)


def test_calibration_subset():
    records = make_records(50, shape=(2, 2))
    subset = calibration_subset(records, 0.2, seed=4)
    assert len(subset) == 10
    assert [id(r) for r in subset] == [id(r) for r in calibration_subset(records, 0.2, seed=4)]
    with pytest.raises(EmptyInputException):
        calibration_subset([], 0.2, 0)
