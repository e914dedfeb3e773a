from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..numkit import Tensor, ops


def nll_loss(logits: Tensor, y) -> Tensor:
    """Mean negative log-likelihood; ``logits`` is (K,) or (B, K)."""
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    K = logits.shape[-1]
    if ((y < 0) | (y >= K)).any():
        raise ValueError(f"class index out of range [0, {K})")
    z = logits if logits.ndim == 2 else ops.reshape(logits, (1, K))
    if z.shape[0] != y.shape[0]:
        raise ValueError(f"{z.shape[0]} logit rows for {y.shape[0]} labels")
    return ops.neg(ops.mean(ops.pick(ops.log_softmax(z), y)))


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
              weight_decay: float = 0.0) -> None:
    """Bias-corrected Adam with L2 folded into the gradient; updates in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"{name}: grad shape {g.shape} != param shape {p.shape}")
        if weight_decay:
            g = g + weight_decay * p.data
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + eps)
