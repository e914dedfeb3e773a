"""Desk-scale stand-in for rotating-machinery vibration datasets.

Class ``c`` has its own base frequency, harmonic mix, and an amplitude-modulated
impulse train ringing at a class-specific resonance.  Each record adds random
phases, a small frequency jitter and unit-variance white noise.
"""
from __future__ import annotations

import numpy as np

from .graph import PreprocessConfig
from .signals import SignalRecord

BASE_FREQ = 0.02      # cycles per sample for class 0
FREQ_STEP = 0.011
JITTER = 0.01         # relative frequency jitter per record


def class_profile(c: int) -> dict:
    """Deterministic signature parameters of class ``c``."""
    return {
        "freq": BASE_FREQ + FREQ_STEP * c,
        "harmonics": (1.0, 0.6 * ((c + 1) % 3) / 2.0, 0.4 * (c % 2)),
        "impulse_period": 90 + 23 * c,
        "resonance": 0.18 + 0.035 * (c % 4),
        "impulse_gain": 1.5 + 0.25 * (c % 3),
    }


def _impulse_train(t: np.ndarray, period: int, resonance: float, offset: int, decay: float = 0.08):
    phase = (t - offset) % period
    return np.exp(-decay * phase) * np.sin(2 * np.pi * resonance * phase)


def synth_record(c: int, length: int, n_channels: int, rng: np.random.Generator,
                 amplitude: float = 1.5) -> np.ndarray:
    p = class_profile(c)
    t = np.arange(length, dtype=np.float64)
    f = p["freq"] * (1.0 + JITTER * rng.uniform(-1, 1))
    out = np.empty((n_channels, length))
    offset = int(rng.integers(0, p["impulse_period"]))
    am_phase = rng.uniform(0, 2 * np.pi)
    for ch in range(n_channels):
        sig = np.zeros(length)
        for h, a in enumerate(p["harmonics"], start=1):
            if a:
                sig += a * np.sin(2 * np.pi * h * f * t + rng.uniform(0, 2 * np.pi))
        am = 1.0 + 0.5 * np.sin(2 * np.pi * f * t / 4.0 + am_phase)
        imp = am * _impulse_train(t, p["impulse_period"], p["resonance"], offset + 7 * ch)
        gain = 1.0 if ch == 0 else 0.7
        out[ch] = amplitude * gain * sig + p["impulse_gain"] * imp + rng.standard_normal(length)
    return out


def generate_synthetic_dataset(
    n_classes: int,
    samples_per_class: int,
    cfg: PreprocessConfig | None = None,
    seed: int = 0,
    n_channels: int = 2,
    amplitude: float = 1.5,
    length: int | None = None,
) -> tuple[SignalRecord, ...]:
    """``n_classes * samples_per_class`` records, each one window long unless ``length`` is given."""
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if samples_per_class < 1:
        raise ValueError("need at least one sample per class")
    length = (cfg or PreprocessConfig()).window_len if length is None else int(length)
    rng = np.random.default_rng(seed)
    records = []
    for c in range(n_classes):
        for _ in range(samples_per_class):
            records.append(SignalRecord(synth_record(c, length, n_channels, rng, amplitude), c))
    return tuple(records)
