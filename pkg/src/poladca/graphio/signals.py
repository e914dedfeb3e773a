from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SignalRecord:
    """One labelled multichannel recording, ``channels`` is (m sensors, L steps)."""

    channels: np.ndarray
    label: int

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 2 or ch.shape[0] < 1 or ch.shape[1] < 1:
            raise DatasetError(f"channels must be (m, L) with m, L >= 1, got {ch.shape}")
        if not np.isfinite(ch).all():
            raise DatasetError("non-finite sample in signal record")
        if int(self.label) < 0:
            raise DatasetError(f"negative label {self.label}")
        ch.setflags(write=False)
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "label", int(self.label))

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def length(self) -> int:
        return self.channels.shape[1]


def window_starts(total: int, window_len: int, stride: int) -> range:
    if window_len < 1 or stride < 1:
        raise ValueError("window_len and stride must be positive")
    if window_len > total:
        raise ValueError(f"window length {window_len} exceeds signal length {total}")
    count = (total - window_len) // stride + 1
    return range(0, count * stride, stride)


def segment_signal(rec: SignalRecord, window_len: int, stride: int) -> list[np.ndarray]:
    """Full sliding windows (m, window_len) starting at 0, stride, 2*stride, ..."""
    return [rec.channels[:, s:s + window_len] for s in window_starts(rec.length, window_len, stride)]


def zscore(window: np.ndarray) -> np.ndarray:
    """Per-channel standardisation with the sample (n-1) standard deviation.

    Constant channels are only centred.
    """
    w = np.asarray(window, dtype=np.float64)
    centred = w - w.mean(axis=-1, keepdims=True)
    if w.shape[-1] < 2:
        return centred
    std = w.std(axis=-1, ddof=1, keepdims=True)
    safe = np.where(std > 0, std, 1.0)
    return centred / safe


def inject_snr_noise(window: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise at ``snr_db`` relative to each channel's mean power."""
    w = np.asarray(window, dtype=np.float64)
    if not np.isfinite(w).all():
        raise ValueError("window contains non-finite samples")
    if math.isinf(snr_db) and snr_db > 0:
        return w.copy()
    power = np.mean(w * w, axis=-1, keepdims=True)
    if (power == 0).any():
        raise ValueError("cannot set a finite SNR on a zero-power channel")
    var = power / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    return w + rng.standard_normal(w.shape) * np.sqrt(var)
