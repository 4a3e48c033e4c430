import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import InvalidInputException
from sqp.models.audio import Waveform
from sqp.services.audio.frontend_service import (
    build_mel_filterbank,
    frame_count,
    frame_segments,
    hz_to_mel,
    log_mel_spectrogram,
    mel_to_hz,
)


def _tone(frequency_hz, seconds, sample_rate_hz=16000, amplitude=0.5):
    t = np.arange(int(seconds * sample_rate_hz)) / sample_rate_hz
    return Waveform(
        samples=amplitude * np.sin(2 * np.pi * frequency_hz * t), sample_rate_hz=sample_rate_hz
    )


def test_mel_scale_round_trip():
    frequencies = np.array([0.0, 100.0, 1000.0, 8000.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(frequencies)), frequencies, atol=1e-9)
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.5)


def test_filterbank_shape_and_weights():
    filterbank = build_mel_filterbank(16000, 1024, 120)
    assert filterbank.weights.shape == (120, 513)
    assert filterbank.weights.min() >= 0.0
    assert np.all(filterbank.weights.max(axis=1) > 0.0)
    assert filterbank.f_max_hz == 8000.0


@pytest.mark.parametrize("f_min, f_max", [(-1.0, 4000.0), (4000.0, 4000.0), (0.0, 9000.0)])
def test_filterbank_rejects_invalid_range(f_min, f_max):
    with pytest.raises(InvalidInputException, match="Invalid frequency range"):
        build_mel_filterbank(16000, 1024, 40, f_min, f_max)


def test_filterbank_rejects_bands_narrower_than_a_bin():
    with pytest.raises(InvalidInputException, match="covers no FFT bin"):
        build_mel_filterbank(16000, 64, 120)


def test_frame_count():
    assert frame_count(144000, 640, 320) == 449
    assert frame_count(48000, 640, 320) == 149
    assert frame_count(639, 640, 320) == 0


def test_nine_second_clip_gives_449_frames(frontend_service):
    spectrogram = frontend_service.spectrogram(_tone(440.0, 9.0))
    assert spectrogram.frames.shape == (449, 120)
    assert spectrogram.frames.dtype == np.float32
    assert frontend_service.frames_for(9.0) == 449
    assert frontend_service.frames_for(3.0) == 149


def test_tone_energy_lands_in_matching_band(frontend_service):
    spectrogram = frontend_service.spectrogram(_tone(1000.0, 1.0))
    centers = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(8000.0), 122))[1:-1]
    peak_band = int(np.argmax(spectrogram.frames.mean(axis=0)))
    assert abs(centers[peak_band] - 1000.0) < 60.0


def test_silence_is_floored_not_infinite(frontend_service):
    silence = Waveform(samples=np.zeros(16000), sample_rate_hz=16000)
    frames = frontend_service.spectrogram(silence).frames
    assert np.all(np.isfinite(frames))
    assert frames.max() == pytest.approx(-10.0)


def test_waveform_shorter_than_one_window(frontend_service):
    with pytest.raises(InvalidInputException, match="shorter"):
        frontend_service.spectrogram(_tone(440.0, 0.01))


def test_sample_rate_mismatch(frontend_service):
    filterbank = build_mel_filterbank(8000, 512, 40)
    with pytest.raises(InvalidInputException, match="does not match"):
        log_mel_spectrogram(_tone(440.0, 1.0), filterbank)
    with pytest.raises(InvalidInputException, match="Only 16000 Hz"):
        frontend_service.spectrogram(_tone(440.0, 1.0, sample_rate_hz=8000))


def test_thirty_second_clip_gives_eleven_segments():
    segments = frame_segments(_tone(300.0, 30.0), 9.0, 2.0)
    assert len(segments) == 11
    assert all(len(segment.samples) == 144000 for segment in segments)
    np.testing.assert_array_equal(
        segments[1].samples, _tone(300.0, 30.0).samples[32000:176000]
    )


def test_clip_shorter_than_a_segment_gives_none():
    assert frame_segments(_tone(300.0, 5.0), 9.0, 2.0) == []
