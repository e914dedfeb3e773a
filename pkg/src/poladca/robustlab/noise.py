"""Additive Gaussian feature noise, optionally correlated across nodes."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PSD_TOL = 1e-10


@dataclass(frozen=True)
class NoiseSpec:
    sigma_bar: float
    rho: np.ndarray | None = None  # (n, n) node correlation; None means iid
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma_bar) or self.sigma_bar < 0:
            raise ValueError("sigma_bar must be finite and >= 0")
        if self.rho is not None:
            r = np.array(self.rho, dtype=np.float64)
            if r.ndim != 2 or r.shape[0] != r.shape[1]:
                raise ValueError("rho must be a square matrix")
            if not np.isfinite(r).all() or np.abs(r).max() > 1.0:
                raise ValueError("rho entries must lie in [-1, 1]")
            if not np.array_equal(r, r.T):
                raise ValueError("rho must be symmetric")
            if not np.all(np.diag(r) == 1.0):
                raise ValueError("rho must have a unit diagonal")
            r.setflags(write=False)
            object.__setattr__(self, "rho", r)
            _ = self.factor  # validate positive semidefiniteness eagerly

    @property
    def correlation(self) -> str:
        return "iid" if self.rho is None else "pairwise"

    @cached_property
    def factor(self) -> np.ndarray | None:
        """L with L L^T == rho, via eigendecomposition."""
        if self.rho is None:
            return None
        lam, V = np.linalg.eigh(self.rho)
        if lam.min() < -PSD_TOL:
            raise ValueError(f"rho is not positive semidefinite (min eigenvalue {lam.min():.3e})")
        return V * np.sqrt(np.clip(lam, 0.0, None))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        return {
            "sigma_bar": self.sigma_bar,
            "correlation": self.correlation,
            "rho": None if self.rho is None else self.rho.tolist(),
            "seed": self.seed,
        }


def draw_noise(shape: tuple[int, int], spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    n, D = shape
    Z = rng.standard_normal((n, D))
    if spec.rho is None:
        return spec.sigma_bar * Z
    if spec.rho.shape[0] != n:
        raise ValueError(f"rho is {spec.rho.shape[0]}x{spec.rho.shape[0]} but X has {n} nodes")
    return spec.sigma_bar * (spec.factor @ Z)


def perturb_features(X, spec: NoiseSpec, rng: np.random.Generator | None = None
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Return (X + eta, eta); ``rng`` defaults to a fresh generator seeded from ``spec``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be (n, D), got {X.shape}")
    eta = draw_noise(X.shape, spec, spec.rng() if rng is None else rng)
    return X + eta, eta


def anticorrelated_rho(n: int, strength: float = 0.8) -> np.ndarray:
    """Unit-diagonal PSD matrix: +strength within each half of the nodes, -strength across."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    u = np.where(np.arange(n) < (n + 1) // 2, 1.0, -1.0)
    r = (1.0 - strength) * np.eye(n) + strength * np.outer(u, u)
    np.fill_diagonal(r, 1.0)
    return r
