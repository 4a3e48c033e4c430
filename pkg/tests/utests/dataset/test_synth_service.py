import numpy as np
import pytest

from sqp.models.dataset import SynthConfig
from sqp.models.enums import SnrDistribution
from sqp.services.dataset.synth_service import (
    SynthService,
    draw_snr_db,
    snr_sigmoid_label,
    synth_waveform,
)


def test_label_function_is_monotone_and_bounded():
    assert snr_sigmoid_label(0.0) == pytest.approx(2.75)
    snrs = np.linspace(-40.0, 60.0, 101)
    labels = [snr_sigmoid_label(snr) for snr in snrs]
    assert np.all(np.diff(labels) > 0)
    assert 1.0 <= min(labels) and max(labels) <= 4.5


def test_same_seed_gives_identical_records(frontend_service):
    cfg = SynthConfig(n_samples=3, rng_seed=7, segment_s=1.0)
    first = SynthService(frontend_service).generate(cfg)
    second = SynthService(frontend_service).generate(cfg)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.spec.frames, b.spec.frames)
        assert a.label == b.label


def test_different_seeds_differ(frontend_service):
    service = SynthService(frontend_service)
    first = service.generate(SynthConfig(n_samples=1, rng_seed=1, segment_s=1.0))
    second = service.generate(SynthConfig(n_samples=1, rng_seed=2, segment_s=1.0))
    assert not np.array_equal(first[0].spec.frames, second[0].spec.frames)


def test_record_shape_follows_segment_length(frontend_service):
    records = SynthService(frontend_service).generate(
        SynthConfig(n_samples=1, segment_s=3.0)
    )
    assert records[0].shape == (149, 120)


def test_snr_draws_respect_bounds_and_skew():
    rng = np.random.default_rng(0)
    uniform = SynthConfig()
    skewed = SynthConfig(snr_distribution=SnrDistribution.LOW_SKEWED)
    uniform_draws = np.array([draw_snr_db(uniform, rng) for _ in range(4000)])
    skewed_draws = np.array([draw_snr_db(skewed, rng) for _ in range(4000)])
    for draws in (uniform_draws, skewed_draws):
        assert draws.min() >= -5.0 and draws.max() <= 25.0
    assert np.median(skewed_draws) < np.median(uniform_draws) - 5.0


def test_noise_level_follows_snr():
    cfg = SynthConfig(segment_s=1.0)
    clean = synth_waveform(cfg, np.random.default_rng(3), 40.0).samples
    noisy = synth_waveform(cfg, np.random.default_rng(3), -5.0).samples
    # same tone, loudness normalised: the noisy mix decorrelates from the clean one
    correlation = np.corrcoef(clean, noisy)[0, 1]
    assert correlation < 0.8


def test_invalid_config_is_rejected():
    with pytest.raises(ValueError):
        SynthConfig(snr_min_db=10.0, snr_max_db=5.0)
    with pytest.raises(ValueError):
        SynthConfig(n_samples=0)
