from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import GraphSample, PreprocessConfig, window_to_sample
from .signals import SignalRecord, inject_snr_noise, segment_signal

TEST_FRACTION = 0.3
VAL_FRACTION = 0.15


def records_to_samples(
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    snr_db: float | None = None,
    noise_seed: int = 0,
) -> list[GraphSample]:
    """Window every record and turn each window into a graph.

    With ``snr_db`` set, noise is injected into the raw window before
    standardisation; window ``i`` (global order) uses seed ``noise_seed + i``.
    """
    samples = []
    for rec in records:
        for w in segment_signal(rec, cfg.window_len, cfg.stride):
            if snr_db is not None:
                w = inject_snr_noise(w, snr_db, noise_seed + len(samples))
            samples.append(window_to_sample(w, cfg, rec.label))
    return samples


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]


def _stratified(indices: np.ndarray, labels: np.ndarray, frac: float, rng) -> tuple[list, list]:
    held, kept = [], []
    for c in np.unique(labels[indices]):
        members = indices[labels[indices] == c]
        members = members[rng.permutation(len(members))]
        k = int(round(frac * len(members)))
        held.extend(members[:k].tolist())
        kept.extend(members[k:].tolist())
    return sorted(kept), sorted(held)


def stratified_split(labels: Sequence[int], seed: int,
                     test_fraction: float = TEST_FRACTION,
                     val_fraction: float = VAL_FRACTION) -> Split:
    """7:3 train/test per class, then a stratified validation carve-out of train."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = _stratified(np.arange(len(labels)), labels, test_fraction, rng)
    train, val = _stratified(np.asarray(train, dtype=np.int64), labels, val_fraction, rng)
    if not train or not test:
        raise ValueError("split produced an empty train or test set")
    return Split(tuple(train), tuple(val), tuple(test))
