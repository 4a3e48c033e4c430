import logging
from typing import List, Optional

import numpy as np
from scipy.signal import lfilter

from sqp.models.audio import Waveform
from sqp.models.dataset import SampleRecord, SynthConfig
from sqp.models.enums import LabelFunction, SnrDistribution
from sqp.services.audio.frontend_service import FrontendService

log = logging.getLogger(__name__)

LABEL_FLOOR = 1.0
LABEL_SPAN = 3.5
SNR_SLOPE_DB = 6.0


def snr_sigmoid_label(snr_db: float) -> float:
    """Monotone map of SNR into [1.0, 4.5]; 0 dB gives 2.75."""
    return LABEL_FLOOR + LABEL_SPAN / (1.0 + float(np.exp(-snr_db / SNR_SLOPE_DB)))


LABEL_FUNCTIONS = {LabelFunction.SNR_SIGMOID: snr_sigmoid_label}


def _rms(signal: np.ndarray) -> float:
    return float(np.sqrt(np.mean(signal**2)))


def draw_snr_db(cfg: SynthConfig, rng: np.random.Generator) -> float:
    span = cfg.snr_max_db - cfg.snr_min_db
    if cfg.snr_distribution == SnrDistribution.LOW_SKEWED:
        return cfg.snr_min_db + span * float(rng.beta(1.0, 3.0))
    return cfg.snr_min_db + span * float(rng.random())


def tone_complex(cfg: SynthConfig, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """Harmonic complex with vibrato and a syllable-rate envelope, unit RMS."""
    t = np.arange(n_samples) / cfg.sample_rate_hz
    f0 = rng.uniform(cfg.f0_min_hz, cfg.f0_max_hz)
    vibrato = 1.0 + 0.02 * np.sin(2.0 * np.pi * rng.uniform(3.0, 7.0) * t)
    phase = 2.0 * np.pi * np.cumsum(f0 * vibrato) / cfg.sample_rate_hz

    nyquist = cfg.sample_rate_hz / 2.0
    tone = np.zeros(n_samples)
    offsets = rng.uniform(0.0, 2.0 * np.pi, size=cfg.n_harmonics)
    for k in range(1, cfg.n_harmonics + 1):
        if k * f0 * 1.02 >= nyquist:
            break
        tone += np.sin(k * phase + offsets[k - 1]) / k

    syllable_phase = rng.uniform(0.0, 2.0 * np.pi)
    envelope = 0.2 + 0.8 * 0.5 * (
        1.0 - np.cos(2.0 * np.pi * cfg.syllable_rate_hz * t + syllable_phase)
    )
    tone *= envelope
    return tone / _rms(tone)


def coloured_noise(rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """White noise through a random one-pole lowpass, unit RMS."""
    white = rng.standard_normal(n_samples)
    pole = rng.uniform(0.0, 0.9)
    noise = lfilter([1.0 - pole], [1.0, -pole], white)
    return noise / _rms(noise)


def synth_waveform(
    cfg: SynthConfig, rng: np.random.Generator, snr_db: float
) -> Waveform:
    n_samples = int(round(cfg.segment_s * cfg.sample_rate_hz))
    tone = tone_complex(cfg, rng, n_samples)
    noise = coloured_noise(rng, n_samples) * 10.0 ** (-snr_db / 20.0)
    mixture = tone + noise
    # overall loudness is random so the level carries no label information
    mixture *= rng.uniform(0.05, 0.2) / _rms(mixture)
    return Waveform(samples=mixture, sample_rate_hz=cfg.sample_rate_hz)


def synth_generate(
    cfg: SynthConfig, frontend: Optional[FrontendService] = None
) -> List[SampleRecord]:
    if frontend is None:
        frontend = FrontendService(
            sample_rate_hz=cfg.sample_rate_hz,
            n_fft=1024,
            n_mels=120,
            f_min_hz=0.0,
            f_max_hz=None,
            win_ms=40.0,
            hop_ms=20.0,
        )
    label_fn = LABEL_FUNCTIONS[cfg.label_fn]
    rng = np.random.default_rng(cfg.rng_seed)
    records = []
    for _ in range(cfg.n_samples):
        snr_db = draw_snr_db(cfg, rng)
        waveform = synth_waveform(cfg, rng, snr_db)
        records.append(
            SampleRecord(spec=frontend.spectrogram(waveform), label=label_fn(snr_db))
        )
    log.info(
        "Generated %d synthetic samples (seed %d, %s SNR)",
        cfg.n_samples,
        cfg.rng_seed,
        cfg.snr_distribution.value,
    )
    return records


class SynthService:
    def __init__(self, frontend_service: FrontendService):
        self._frontend_service = frontend_service

    def generate(self, cfg: SynthConfig) -> List[SampleRecord]:
        return synth_generate(cfg, self._frontend_service)
