from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Amplification:
    gamma: float
    gamma_pol: float
    clamped: bool       # radicand of gamma was negative and clamped to 0
    clamped_pol: bool

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "gamma_pol": self.gamma_pol,
                "clamped": self.clamped, "clamped_pol": self.clamped_pol}


def amplification_factors(alphas: Sequence[float], rho) -> Amplification:
    """Noise amplification of a weighted sum under correlated noise, unsigned and polarised.

    ``rho`` is a full correlation matrix, or a scalar applied to every off-diagonal pair.
    """
    a = np.asarray(alphas, dtype=np.float64).reshape(-1)
    n = a.size
    r = np.asarray(rho, dtype=np.float64)
    if r.ndim == 0:
        r = np.full((n, n), float(r))
        np.fill_diagonal(r, 1.0)
    if r.shape != (n, n):
        raise ValueError(f"rho must be {n}x{n}, got {r.shape}")
    if not np.isfinite(a).all() or not np.isfinite(r).all():
        raise ValueError("non-finite input")
    iu = np.triu_indices(n, k=1)
    cross = (np.outer(a, a) * r)[iu]
    rad = 1.0 + 2.0 * cross.sum()
    rad_pol = 1.0 - 2.0 * np.abs(cross).sum()
    return Amplification(
        math.sqrt(max(rad, 0.0)), math.sqrt(max(rad_pol, 0.0)), rad < 0, rad_pol < 0
    )
