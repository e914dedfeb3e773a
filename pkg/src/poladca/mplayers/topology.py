"""Constant per-batch graph operators derived from neighbour lists.

All arrays carry a leading batch axis B; every graph in a batch has the same
node count n.  Neighbour index arrays are padded to the largest degree in the
batch, with a 0/1 mask marking real entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from ..graphio.graph import GraphSample


class IsolatedNodeError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    adj: np.ndarray  # (B, n, n) 0/1, no self loops

    @classmethod
    def from_samples(cls, samples: Sequence[GraphSample]) -> "Topology":
        sizes = {s.n_nodes for s in samples}
        if len(sizes) != 1:
            raise ValueError(f"batch mixes graph sizes {sorted(sizes)}")
        return cls(np.stack([s.adjacency() for s in samples]))

    @classmethod
    def from_neighbors(cls, neighbors: Sequence[Sequence[int]]) -> "Topology":
        n = len(neighbors)
        a = np.zeros((1, n, n))
        for i, nb in enumerate(neighbors):
            a[0, i, list(nb)] = 1.0
        return cls(a)

    @property
    def batch(self) -> int:
        return self.adj.shape[0]

    @property
    def n(self) -> int:
        return self.adj.shape[1]

    @cached_property
    def degree(self) -> np.ndarray:
        return self.adj.sum(axis=-1, keepdims=True)  # (B, n, 1)

    def require_neighbors(self) -> None:
        if (self.degree == 0).any():
            b, i, _ = np.argwhere(self.degree == 0)[0]
            raise IsolatedNodeError(f"node {i} of graph {b} has no neighbours")

    @cached_property
    def mean_operator(self) -> np.ndarray:
        self.require_neighbors()
        return self.adj / self.degree

    @cached_property
    def neighbor_index(self) -> tuple[np.ndarray, np.ndarray]:
        """(idx, mask): idx (B, n, K) int, mask (B, n, K, 1) float."""
        B, n, _ = self.adj.shape
        kmax = max(int(self.degree.max()), 1)
        idx = np.zeros((B, n, kmax), dtype=np.int64)
        mask = np.zeros((B, n, kmax, 1))
        for b in range(B):
            for i in range(n):
                nb = np.flatnonzero(self.adj[b, i])
                idx[b, i, : len(nb)] = nb
                mask[b, i, : len(nb), 0] = 1.0
        return idx, mask

    @cached_property
    def inv_dof(self) -> np.ndarray:
        """1 / (|N(i)| - 1), and 0 where a node has a single neighbour."""
        d = self.degree
        return np.where(d > 1, 1.0 / np.maximum(d - 1.0, 1.0), 0.0)

    @cached_property
    def gcn_operator(self) -> np.ndarray:
        a_hat = self.adj + np.eye(self.n)[None]
        d = a_hat.sum(axis=-1)
        inv = 1.0 / np.sqrt(d)
        return inv[:, :, None] * a_hat * inv[:, None, :]

    @cached_property
    def gcn_neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """Self plus neighbours: idx (B, n, K+1) and symmetric-normalised weights (B, n, K+1, 1)."""
        idx, mask = self.neighbor_index
        B, n, _ = idx.shape
        self_idx = np.broadcast_to(np.arange(n)[None, :, None], (B, n, 1))
        full = np.concatenate([self_idx, idx], axis=-1)
        inv = 1.0 / np.sqrt(self.degree[..., 0] + 1.0)  # (B, n)
        w = inv[:, :, None] * np.take_along_axis(inv[:, None, :].repeat(n, 1), full, axis=-1)
        valid = np.concatenate([np.ones((B, n, 1)), mask[..., 0]], axis=-1)
        return full, (w * valid)[..., None]

    @cached_property
    def attention_mask(self) -> np.ndarray:
        self.require_neighbors()
        return self.adj > 0
