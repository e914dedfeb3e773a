"""Online sliding-window diagnosis with a MAP decision per window."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .graphio.graph import PreprocessConfig, window_to_sample
from .mplayers.network import Network
from .mplayers.topology import Topology
from .numkit import Tensor


class PreprocessMismatchError(ValueError):
    pass


def map_decision(logits) -> tuple[int, np.ndarray]:
    """Softmax posterior and its argmax (ties to the lowest index)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or not np.isfinite(z).all():
        raise ValueError("logits must be a finite vector")
    e = np.exp(z - z.max())
    post = e / e.sum()
    return int(np.argmax(z)), post


@dataclass
class Emission:
    t: int
    cls: int
    posterior: np.ndarray
    gate_weights: np.ndarray
    logits: np.ndarray

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "class": self.cls,
            "posterior": [float(v) for v in self.posterior],
            "gate_weights": [float(v) for v in self.gate_weights],
        }


def check_compatible(model_pre: PreprocessConfig, stream_pre: PreprocessConfig) -> None:
    a, b = model_pre.to_dict(), stream_pre.to_dict()
    diff = {k: (a[k], b[k]) for k in a if a[k] != b[k]}
    if diff:
        detail = ", ".join(f"{k}: model={m!r} stream={s!r}" for k, (m, s) in sorted(diff.items()))
        raise PreprocessMismatchError(f"stream preprocessing differs from checkpoint ({detail})")


def diagnose_window(net: Network, window: np.ndarray, pre: PreprocessConfig, t: int = 0) -> Emission:
    """One decision for an (m, T) window, using the same graph construction as training."""
    sample = window_to_sample(np.ascontiguousarray(window, dtype=np.float64), pre)
    x = Tensor(sample.node_features[None])
    res = net.forward(x, Topology(sample.adjacency()[None]))
    logits = res.logits.data[0].copy()
    cls, post = map_decision(logits)
    gate = res.routing[-1].data[0].mean(axis=0) if res.routing else np.zeros(0)
    return Emission(t, cls, post, gate, logits)


class StreamState:
    """Ring buffer over incoming time steps; a decision every ``stride`` steps once full."""

    def __init__(self, net: Network, pre: PreprocessConfig):
        self.net = net
        self.pre = pre
        self.T = pre.window_len
        self.s = pre.stride
        self.buffer: deque[np.ndarray] = deque(maxlen=self.T)
        self.seen = 0        # time steps consumed
        self.next_end = self.T  # window [next_end - T, next_end) is due next

    def push(self, step) -> Emission | None:
        row = np.asarray(step, dtype=np.float64).reshape(-1)
        if self.buffer and row.shape != self.buffer[0].shape:
            raise ValueError(f"time step {self.seen} has {row.size} channels, expected {self.buffer[0].size}")
        self.buffer.append(row)
        self.seen += 1
        if self.seen < self.next_end:
            return None
        t = self.next_end - self.T
        self.next_end += self.s
        window = np.stack(self.buffer, axis=1)  # (m, T)
        return diagnose_window(self.net, window, self.pre, t)


def stream_diagnose(source: Iterable, net: Network, pre: PreprocessConfig,
                    stream_pre: PreprocessConfig | None = None) -> Iterator[Emission]:
    """Yield one emission per full window of ``source`` (an iterable of channel rows)."""
    if stream_pre is not None:
        check_compatible(pre, stream_pre)
    state = StreamState(net, pre)
    for step in source:
        em = state.push(step)
        if em is not None:
            yield em
