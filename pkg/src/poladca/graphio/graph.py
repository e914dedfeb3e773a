from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .signals import zscore

NODE_MODES = ("segments", "timesteps")


@dataclass(frozen=True)
class PreprocessConfig:
    window_len: int = 1000
    stride: int = 500
    k: int = 8
    zscore: bool = True
    node_mode: str = "segments"
    segment_count: int = 20

    def __post_init__(self):
        if self.window_len < 1 or self.stride < 1:
            raise ValueError("window_len and stride must be >= 1")
        if self.node_mode not in NODE_MODES:
            raise ValueError(f"node_mode must be one of {NODE_MODES}, got {self.node_mode!r}")
        if self.node_mode == "segments":
            if self.segment_count < 1 or self.window_len % self.segment_count:
                raise ValueError(
                    f"window_len {self.window_len} not divisible by segment_count {self.segment_count}"
                )
        if not 1 <= self.k < self.n_nodes:
            raise ValueError(f"k={self.k} must satisfy 1 <= k < n={self.n_nodes}")

    @property
    def n_nodes(self) -> int:
        return self.segment_count if self.node_mode == "segments" else self.window_len

    def to_dict(self) -> dict:
        return dict(
            window_len=self.window_len,
            stride=self.stride,
            k=self.k,
            zscore=self.zscore,
            node_mode=self.node_mode,
            segment_count=self.segment_count,
        )


@dataclass(frozen=True)
class GraphSample:
    node_features: np.ndarray
    neighbors: tuple[tuple[int, ...], ...]
    label: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.node_features, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"node_features must be (n, D), got {x.shape}")
        if len(self.neighbors) != x.shape[0]:
            raise ValueError("one neighbour list per node required")
        x.setflags(write=False)
        object.__setattr__(self, "node_features", x)
        object.__setattr__(self, "neighbors", tuple(tuple(int(j) for j in nb) for nb in self.neighbors))

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def n_features(self) -> int:
        return self.node_features.shape[1]

    def adjacency(self) -> np.ndarray:
        a = self._cache.get("adj")
        if a is None:
            n = self.n_nodes
            a = np.zeros((n, n))
            for i, nb in enumerate(self.neighbors):
                a[i, list(nb)] = 1.0
            a.setflags(write=False)
            self._cache["adj"] = a
        return a

    def with_features(self, x: np.ndarray) -> "GraphSample":
        """Same topology and label, new node features."""
        return GraphSample(x, self.neighbors, self.label)


def build_knn_graph(node_features: np.ndarray, k: int) -> tuple[tuple[int, ...], ...]:
    """Union-symmetrised k-nearest-neighbour lists (Euclidean, ties to lower index)."""
    x = np.asarray(node_features, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} must satisfy 1 <= k < n={n}")
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    sets = [set() for _ in range(n)]
    for i in range(n):
        for j in order[i]:
            sets[i].add(int(j))
            sets[int(j)].add(i)
    return tuple(tuple(sorted(s)) for s in sets)


def window_nodes(window: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    m, length = w.shape
    if length != cfg.window_len:
        raise ValueError(f"window has {length} steps, config expects {cfg.window_len}")
    if cfg.node_mode == "timesteps":
        return w.T.copy()
    seg = length // cfg.segment_count
    # (m, S, seg) -> (S, m*seg): each node holds its chunk of every channel
    return w.reshape(m, cfg.segment_count, seg).transpose(1, 0, 2).reshape(cfg.segment_count, m * seg)


def window_to_sample(window: np.ndarray, cfg: PreprocessConfig, label: int = 0) -> GraphSample:
    w = zscore(window) if cfg.zscore else np.asarray(window, dtype=np.float64)
    x = window_nodes(w, cfg)
    return GraphSample(x, build_knn_graph(x, cfg.k), label)


def validate_graph(sample: GraphSample) -> None:
    """Raise if neighbour lists contain self loops, are asymmetric or leave a node isolated."""
    n = sample.n_nodes
    for i, nb in enumerate(sample.neighbors):
        if i in nb:
            raise ValueError(f"node {i} lists itself as neighbour")
        if n >= 2 and not nb:
            raise ValueError(f"node {i} has no neighbours")
        for j in nb:
            if not 0 <= j < n or i not in sample.neighbors[j]:
                raise ValueError(f"edge {i}->{j} is not symmetric")


def stack_features(samples: Sequence[GraphSample]) -> np.ndarray:
    return np.stack([s.node_features for s in samples])
