from __future__ import annotations

from typing import Sequence

import numpy as np


def confusion_matrix(pred: Sequence[int], labels: Sequence[int], K: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if pred.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    for name, a in (("label", labels), ("prediction", pred)):
        if a.size and (a.min() < 0 or a.max() >= K):
            raise ValueError(f"{name} out of range [0, {K})")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (labels, pred), 1)
    return cm


def evaluate_metrics(pred: Sequence[int], labels: Sequence[int], K: int) -> dict:
    cm = confusion_matrix(pred, labels, K)
    total = cm.sum()
    tp = np.diag(cm).astype(np.float64)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # predicted + true per class
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    return {
        "acc": float(tp.sum() / total) if total else 0.0,
        "macro_f1": float(f1.mean()),
        "confusion": cm,
    }
