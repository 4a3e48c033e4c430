import logging
from typing import List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from sqp.exceptions.sqp_exceptions import InvalidInputException
from sqp.models.audio import LogMelSpectrogram, MelFilterbank, Waveform

log = logging.getLogger(__name__)

LOG_EPS = 1e-10


def hz_to_mel(frequency_hz):
    """HTK Mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(frequency_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def build_mel_filterbank(
    sample_rate_hz: int,
    n_fft: int,
    n_mels: int = 120,
    f_min: float = 0.0,
    f_max: Optional[float] = None,
) -> MelFilterbank:
    nyquist = sample_rate_hz / 2.0
    f_max = nyquist if f_max is None else f_max
    if n_mels < 1:
        raise InvalidInputException(error_description=f"n_mels must be >= 1, got {n_mels}")
    if not 0.0 <= f_min < f_max <= nyquist:
        raise InvalidInputException(
            error_description=f"Invalid frequency range [{f_min}, {f_max}] for "
            f"Nyquist {nyquist}"
        )

    fft_freqs = np.linspace(0.0, nyquist, n_fft // 2 + 1)
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (fft_freqs[None, :] - lower) / (center - lower)
    falling = (upper - fft_freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling)).astype(np.float32)

    empty_rows = np.flatnonzero(weights.max(axis=1) <= 0)
    if empty_rows.size:
        raise InvalidInputException(
            error_description=f"{n_mels} mel bands are too narrow for n_fft={n_fft}; "
            f"band {int(empty_rows[0])} covers no FFT bin"
        )
    return MelFilterbank(
        sample_rate_hz=sample_rate_hz,
        n_fft=n_fft,
        n_mels=n_mels,
        f_min_hz=f_min,
        f_max_hz=f_max,
        weights=weights,
    )


def frame_count(n_samples: int, win_length: int, hop_length: int) -> int:
    if n_samples < win_length:
        return 0
    return (n_samples - win_length) // hop_length + 1


def log_mel_spectrogram(
    waveform: Waveform,
    filterbank: MelFilterbank,
    win_ms: float = 40.0,
    hop_ms: float = 20.0,
) -> LogMelSpectrogram:
    if waveform.sample_rate_hz != filterbank.sample_rate_hz:
        raise InvalidInputException(
            error_description=f"Waveform rate {waveform.sample_rate_hz} Hz does not "
            f"match filterbank rate {filterbank.sample_rate_hz} Hz"
        )
    win_length = int(round(win_ms * waveform.sample_rate_hz / 1000.0))
    hop_length = int(round(hop_ms * waveform.sample_rate_hz / 1000.0))
    if len(waveform.samples) < win_length:
        raise InvalidInputException(
            error_description=f"Waveform of {len(waveform.samples)} samples is shorter "
            f"than one {win_length}-sample window"
        )

    samples = waveform.samples.astype(np.float64)
    frames = sliding_window_view(samples, win_length)[::hop_length]
    window = get_window("hann", win_length, fftbins=True)
    spectrum = np.fft.rfft(frames * window, n=filterbank.n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    mel_power = power @ filterbank.weights.astype(np.float64).T
    return LogMelSpectrogram(
        frames=np.log10(mel_power + LOG_EPS), win_ms=win_ms, hop_ms=hop_ms
    )


def frame_segments(
    waveform: Waveform, seg_s: float = 9.0, stride_s: float = 2.0
) -> List[Waveform]:
    """Full-length segments only; a clip shorter than one segment yields none."""
    seg_length = int(round(seg_s * waveform.sample_rate_hz))
    stride_length = int(round(stride_s * waveform.sample_rate_hz))
    count = frame_count(len(waveform.samples), seg_length, stride_length)
    return [
        Waveform(
            samples=waveform.samples[i * stride_length : i * stride_length + seg_length],
            sample_rate_hz=waveform.sample_rate_hz,
            clip_id=waveform.clip_id,
        )
        for i in range(count)
    ]


class FrontendService:
    def __init__(
        self,
        sample_rate_hz: int,
        n_fft: int,
        n_mels: int,
        f_min_hz: float,
        f_max_hz: Optional[float],
        win_ms: float,
        hop_ms: float,
    ):
        self.sample_rate_hz = sample_rate_hz
        self.win_ms = win_ms
        self.hop_ms = hop_ms
        self.filterbank = build_mel_filterbank(
            sample_rate_hz, n_fft, n_mels, f_min_hz, f_max_hz
        )

    def spectrogram(self, waveform: Waveform) -> LogMelSpectrogram:
        if waveform.sample_rate_hz != self.sample_rate_hz:
            raise InvalidInputException(
                error_description=f"Only {self.sample_rate_hz} Hz audio is supported, "
                f"got {waveform.sample_rate_hz} Hz"
            )
        return log_mel_spectrogram(waveform, self.filterbank, self.win_ms, self.hop_ms)

    def frames_for(self, duration_s: float) -> int:
        win_length = int(round(self.win_ms * self.sample_rate_hz / 1000.0))
        hop_length = int(round(self.hop_ms * self.sample_rate_hz / 1000.0))
        return frame_count(
            int(round(duration_s * self.sample_rate_hz)), win_length, hop_length
        )
