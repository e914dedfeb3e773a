"""Message-passing layers.

Node-feature tensors are (B, n, D).  Attention in the DCA family spans every
node pair of a graph, so Q, K, V are stacked over nodes and scores are n x n
per head.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..numkit import Tensor, ops
from .params import DcaLayerParams, GatParams, GcnParams, PolaLayerParams, ScaParams
from .topology import Topology

EXPERT_ACTIVATIONS: tuple[Callable[[Tensor], Tensor], ...] = (
    lambda t: t,
    ops.relu,
    ops.tanh,
)


@dataclass
class LocalFeatures:
    Fx: Tensor  # projected node feature
    Fy: Tensor  # neighbourhood mean (consensus)
    Fz: Tensor  # neighbourhood spread (diversity), >= 0


def local_features(x: Tensor, topo: Topology, p: DcaLayerParams) -> LocalFeatures:
    topo.require_neighbors()
    Fx = x @ p.Wx
    Fy = Tensor(topo.mean_operator) @ (x @ p.Wy)
    # spread of Wz-projected neighbours around the Wy-projected mean, as in the
    # defining formula; divisor |N(i)| - 1, zero for single-neighbour nodes
    idx, mask = topo.neighbor_index
    Zn = ops.gather(x @ p.Wz, idx)                                  # (B, n, K, M)
    dev = Zn - ops.reshape(Fy, Fy.shape[:-1] + (1, Fy.shape[-1]))
    sq = ops.sum(dev * dev * Tensor(mask), axis=-2)                # (B, n, M)
    Fz = ops.sqrt(ops.relu(sq * Tensor(topo.inv_dof)))
    return LocalFeatures(Fx, Fy, Fz)


def split_heads(t: Tensor, heads: int) -> Tensor:
    *lead, n, M = t.shape
    if M % heads:
        raise ValueError(f"width {M} not divisible by {heads} heads")
    return ops.swapaxes(ops.reshape(t, (*lead, n, heads, M // heads)), -3, -2)


def merge_heads(t: Tensor) -> Tensor:
    *lead, H, n, dk = t.shape
    return ops.reshape(ops.swapaxes(t, -3, -2), (*lead, n, H * dk))


def dca_attend(Q: Tensor, K: Tensor, V: Tensor, heads: int = 1, d_k: float | None = None) -> Tensor:
    """softmax(Q K^T / sqrt(d_k)) V per head, d_k defaulting to M / heads."""
    if not (Q.shape == K.shape and K.shape[:-1] == V.shape[:-1]):
        raise ValueError(f"Q {Q.shape}, K {K.shape}, V {V.shape} do not conform")
    d_k = Q.shape[-1] / heads if d_k is None else d_k
    if d_k <= 0:
        raise ValueError("d_k must be positive")
    Qh, Kh, Vh = (split_heads(t, heads) for t in (Q, K, V))
    scores = ops.scale(Qh @ ops.transpose(Kh), 1.0 / math.sqrt(d_k))
    return merge_heads(ops.row_softmax(scores) @ Vh)


def polar_decompose(T: Tensor) -> tuple[Tensor, Tensor]:
    return ops.relu(T), ops.relu(ops.neg(T))


def polar_scores(Qh: Tensor, Kh: Tensor, weights: tuple[Tensor, Tensor, Tensor, Tensor],
                 d_k: float) -> Tensor:
    """Weighted sum of the four sign-channel score maps, per head.

    ``Qh``/``Kh`` are (..., H, n, d_k); each weight tensor holds H scalars.
    """
    H = Qh.shape[-3]
    wpp, wnn, wpn, wnp = (ops.reshape(w, (H, 1, 1)) for w in weights)
    Qp, Qn = polar_decompose(Qh)
    Kp, Kn = polar_decompose(Kh)
    c = 1.0 / math.sqrt(d_k)
    App = ops.scale(Qp @ ops.transpose(Kp), c)
    Ann = ops.scale(Qn @ ops.transpose(Kn), c)
    Apn = ops.scale(Qp @ ops.transpose(Kn), c)
    Anp = ops.scale(Qn @ ops.transpose(Kp), c)
    return wpp * App + wnn * Ann + wpn * Apn + wnp * Anp


def poladca_attend(Q: Tensor, K: Tensor, V: Tensor, p: PolaLayerParams,
                   activation: str = "relu") -> Tensor:
    heads = p.heads
    M = Q.shape[-1]
    if M % heads:
        raise ValueError(f"width {M} not divisible by {heads} heads")
    Qh, Kh, Vh = (split_heads(t, heads) for t in (Q, K, V))
    A = polar_scores(Qh, Kh, (p.wpp, p.wnn, p.wpn, p.wnp), M / heads)
    out = merge_heads(ops.row_softmax(A) @ Vh) @ ops.transpose(p.Wo)
    if activation == "relu":
        return ops.relu(out)
    if activation == "identity":
        return out
    raise ValueError(f"unknown output activation {activation!r}")


def dual_path_fuse(F: LocalFeatures, p: DcaLayerParams,
                   attend: Callable[[Tensor, Tensor, Tensor], Tensor]) -> tuple[Tensor, Tensor]:
    """Gate between consensus-keyed and diversity-keyed attention; returns (fused, gate)."""
    path1 = attend(F.Fx, F.Fy, F.Fz)
    path2 = attend(F.Fx, F.Fz, F.Fy)
    g = ops.sigmoid(ops.concat([path1, path2]) @ ops.transpose(p.Wg) + p.bg)
    fused = g * path1 + (1.0 - g) * path2
    return fused, g


def expert_fusion(Fx: Tensor, fused: Tensor, p: DcaLayerParams) -> tuple[Tensor, Tensor]:
    """Residual mixture of experts; returns (output, routing weights (..., n, E))."""
    M = fused.shape[-1]
    E = p.n_experts
    logits = ops.concat([fused @ ops.reshape(ex.route, (M, 1)) for ex in p.experts])
    w = ops.row_softmax(logits)
    alpha = ops.sigmoid(ops.mean(logits, axis=-1, keepdims=True))
    mix = None
    for e, ex in enumerate(p.experts):
        act = EXPERT_ACTIVATIONS[e % len(EXPERT_ACTIVATIONS)]
        h = act(fused @ ops.transpose(ex.W1) + ex.b1) @ ops.transpose(ex.W2) + ex.b2
        term = ops.take(w, -1, e, e + 1) * h
        mix = term if mix is None else mix + term
    return Fx + alpha * mix, w


@dataclass
class LayerTrace:
    """Intermediate values exposed for diagnostics."""

    routing: Tensor | None = None
    gate: Tensor | None = None


def dca_layer(x: Tensor, topo: Topology, p: DcaLayerParams, heads: int = 1) -> tuple[Tensor, LayerTrace]:
    F = local_features(x, topo, p)
    fused, g = dual_path_fuse(F, p, lambda q, k, v: dca_attend(q, k, v, heads))
    out, w = expert_fusion(F.Fx, fused, p)
    return out, LayerTrace(w, g)


def poladca_layer(x: Tensor, topo: Topology, p: PolaLayerParams,
                  activation: str = "relu") -> tuple[Tensor, LayerTrace]:
    F = local_features(x, topo, p)
    fused, g = dual_path_fuse(F, p, lambda q, k, v: poladca_attend(q, k, v, p, activation))
    out, w = expert_fusion(F.Fx, fused, p)
    return out, LayerTrace(w, g)


# -- baselines ----------------------------------------------------------------

def _activate(t: Tensor, activation: str) -> Tensor:
    if activation == "relu":
        return ops.relu(t)
    if activation == "identity":
        return t
    raise ValueError(f"unknown activation {activation!r}")


def gcn_layer(x: Tensor, topo: Topology, p: GcnParams, activation: str = "relu") -> Tensor:
    # gather-and-sort aggregation: the sum over i and N(i) does not depend on node order
    idx, w = topo.gcn_neighbors
    msgs = ops.gather(x @ p.W, idx) * Tensor(w)
    return _activate(ops.sorted_sum(msgs, axis=-2), activation)


def gat_layer(x: Tensor, topo: Topology, p: GatParams, activation: str = "relu") -> Tensor:
    h = x @ p.W
    M = h.shape[-1]
    a_src = ops.reshape(ops.take(p.a, 0, 0, M), (M, 1))
    a_dst = ops.reshape(ops.take(p.a, 0, M, 2 * M), (M, 1))
    e = ops.leaky_relu(h @ a_src + ops.transpose(h @ a_dst))
    alpha = ops.row_softmax(e, mask=topo.attention_mask)
    return _activate(alpha @ h, activation)


def sca_attend(XE: Tensor, YD: Tensor, p: ScaParams, heads: int = 1) -> Tensor:
    Q, K, V = XE @ p.Wq, YD @ p.Wk, YD @ p.Wv
    if Q.shape[-1] % heads:
        raise ValueError("width not divisible by heads")
    Qh, Kh, Vh = (split_heads(t, heads) for t in (Q, K, V))
    d_k = Q.shape[-1] / heads
    scores = ops.scale(Qh @ ops.transpose(Kh), 1.0 / math.sqrt(d_k))
    return merge_heads(ops.row_softmax(scores) @ Vh)


def sca_layer(x: Tensor, p: ScaParams, heads: int = 1, activation: str = "relu") -> Tensor:
    return _activate(sca_attend(x, x, p, heads), activation)


# -- cost model -----------------------------------------------------------------

def flop_count(scheme: str, n: int, D: int) -> int:
    """Closed-form per-layer FLOPs of the attention schemes."""
    if n < 1 or D < 1:
        raise ValueError("n and D must be >= 1")
    s = scheme.lower()
    if s == "sca":
        return 2 * n * n * D
    if s == "dca":
        return 2 * n * D * D + 2 * n * n * D
    if s == "poladca":
        return 2 * n * D * D + 2 * n * n * D + 4 * n * D
    raise ValueError(f"unknown scheme {scheme!r}")


def as_batch(x) -> Tensor:
    """Promote an (n, D) array/tensor to (1, n, D)."""
    t = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
    return ops.reshape(t, (1,) + t.shape) if t.ndim == 2 else t
