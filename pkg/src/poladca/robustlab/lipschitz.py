from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import NoiseSpec, perturb_features


def spectral_norm(W, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on W^T W."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    if not W.any():
        return 0.0
    v = np.random.default_rng(seed).standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = W.T @ (W @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = float(np.sqrt(nrm))
        if abs(new - sigma) <= tol * max(new, 1.0):
            sigma = new
            break
        sigma = new
    return float(np.linalg.norm(W @ v))


@dataclass
class LipschitzEstimate:
    mean: float
    max: float
    trials: int          # trials actually used (zero-noise draws are skipped)
    ratios: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean, "max": self.max, "trials": self.trials}


def empirical_lipschitz(f: Callable[[np.ndarray], np.ndarray], X, spec: NoiseSpec, trials: int,
                        rng: np.random.Generator | None = None) -> LipschitzEstimate:
    """Ratios ||f(X + eta) - f(X)||_F / ||eta||_F over ``trials`` noise draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = spec.rng() if rng is None else rng
    X = np.asarray(X, dtype=np.float64)
    base = np.asarray(f(X), dtype=np.float64)
    ratios = []
    for _ in range(trials):
        Xn, eta = perturb_features(X, spec, rng)
        en = np.linalg.norm(eta)
        if en == 0.0:
            continue
        ratios.append(np.linalg.norm(np.asarray(f(Xn)) - base) / en)
    r = np.asarray(ratios)
    if not r.size:
        return LipschitzEstimate(0.0, 0.0, 0, r)
    return LipschitzEstimate(float(r.mean()), float(r.max()), int(r.size), r)
