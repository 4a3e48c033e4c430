import configparser
from typing import Dict

_PATH = "sqp.conf"
_CONFIG = None

DEFAULTS: Dict[str, Dict[str, str]] = {
    "app": {
        "loglevel": "info",
        "threads": "1",
        "seed": "0",
    },
    "frontend": {
        "sample_rate_hz": "16000",
        "win_ms": "40",
        "hop_ms": "20",
        "n_fft": "1024",
        "n_mels": "120",
        "f_min_hz": "0",
        "f_max_hz": "8000",
        "segment_s": "9.0",
        "stride_s": "2.0",
    },
    "synth": {
        "n_samples": "2000",
        "segment_s": "9.0",
        "snr_min_db": "-5",
        "snr_max_db": "25",
        "snr_distribution": "uniform",
        "label_fn": "snr-sigmoid",
        "n_harmonics": "8",
    },
    "train": {
        "batch_size": "128",
        "micro_batch_size": "8",
        "lr": "0.001",
        "max_epochs": "400",
        "adam_beta1": "0.9",
        "adam_beta2": "0.999",
        "adam_eps": "1e-8",
        "plateau_patience": "5",
        "plateau_factor": "0.9",
        "early_stop_patience": "25",
        "surrogate_beta": "5",
    },
    "quantizer": {
        "histogram_bins": "2048",
        "calibration_fraction": "0.2",
        "batch_size": "8",
    },
    "engine": {
        "backend": "masked",
        "dense_head": "fp32",
        "threads": "1",
    },
    "evaluation": {
        "seeds": "0, 1, 2, 3",
        "val_fraction": "0.05",
        "test_fraction": "0.2",
        "include_binary_weights": "false",
        "include_full_int8": "false",
    },
    "bench": {
        "runs": "20",
        "warmup": "3",
    },
}


# pylint:disable=global-statement
def get_config(path=None) -> configparser.ConfigParser:
    """
    Compiled-in defaults overlaid with the INI file at path. A missing file
    leaves the defaults in place. Use this only where injection is not possible.
    """
    global _CONFIG
    global _PATH
    if path is None:
        path = _PATH
    if _CONFIG is None or _PATH != path:
        _PATH = path
        _CONFIG = configparser.ConfigParser()
        _CONFIG.read_dict(DEFAULTS)
        _CONFIG.read(_PATH)
    return _CONFIG


def as_dict(config: configparser.ConfigParser) -> Dict[str, Dict[str, str]]:
    return {section: dict(config[section]) for section in config.sections()}
