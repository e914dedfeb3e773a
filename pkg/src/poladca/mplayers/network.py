"""Full graph classifier: input projection, stacked graph layers, mean readout, MLP head."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..numkit import Tensor, ops
from . import layers as L
from .params import (
    DcaLayerParams,
    GatParams,
    GcnParams,
    PolaLayerParams,
    ScaParams,
    xavier,
    zeros,
)
from .topology import Topology

SCHEMES = ("gcn", "gat", "sca", "dca", "poladca")


@dataclass(frozen=True)
class ArchConfig:
    scheme: str
    d_in: int
    n_classes: int
    d_model: int = 64
    n_layers: int = 3
    n_heads: int = 4
    n_experts: int = 3
    dropout: float = 0.01
    classifier_dims: tuple[int, ...] = (128, 64)
    pola_activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.lower())
        object.__setattr__(self, "classifier_dims", tuple(int(d) for d in self.classifier_dims))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        for name in ("d_in", "n_classes", "d_model", "n_layers", "n_heads", "n_experts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.pola_activation not in ("relu", "identity"):
            raise ValueError("pola_activation must be 'relu' or 'identity'")


def _init_layer(scheme: str, rng, D: int, cfg: ArchConfig):
    M = cfg.d_model
    if scheme == "gcn":
        return GcnParams.init(rng, D, M)
    if scheme == "gat":
        return GatParams.init(rng, D, M)
    if scheme == "sca":
        return ScaParams.init(rng, D, M)
    if scheme == "dca":
        return DcaLayerParams.init(rng, D, M, cfg.n_experts)
    return PolaLayerParams.init(rng, D, M, cfg.n_experts, cfg.n_heads)


@dataclass
class ForwardResult:
    logits: Tensor                                   # (B, K)
    routing: list[Tensor] = field(default_factory=list)  # per layer (B, n, E); empty for baselines


class Network:
    def __init__(self, cfg: ArchConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        M = cfg.d_model
        self.W_in = xavier(rng, (cfg.d_in, M), cfg.d_in, M)
        self.b_in = zeros((M,))
        self.layers = [_init_layer(cfg.scheme, rng, M, cfg) for _ in range(cfg.n_layers)]
        dims = (M, *cfg.classifier_dims, cfg.n_classes)
        self.head = [(xavier(rng, (a, b), a, b), zeros((b,))) for a, b in zip(dims[:-1], dims[1:])]

    # -- parameters ------------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        out = {"input/W": self.W_in, "input/b": self.b_in}
        for ell, p in enumerate(self.layers):
            out.update(p.named(f"layer{ell}"))
        for k, (W, b) in enumerate(self.head):
            out[f"classifier/fc{k}/W"] = W
            out[f"classifier/fc{k}/b"] = b
        return out

    def load_parameters(self, values: Mapping[str, Tensor | np.ndarray]) -> None:
        own = self.parameters()
        missing = sorted(set(own) - set(values))
        extra = sorted(set(values) - set(own))
        if missing or extra:
            raise KeyError(f"parameter mismatch: missing {missing[:5]}, unexpected {extra[:5]}")
        for k, t in own.items():
            v = values[k]
            arr = v.data if isinstance(v, Tensor) else np.asarray(v, dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(f"{k}: shape {arr.shape} != {t.shape}")
            t.data = np.array(arr, dtype=np.float64)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.parameters().items()}

    # -- forward ---------------------------------------------------------------

    def embed(self, x: Tensor, topo: Topology, train: bool = False,
              rng: np.random.Generator | None = None) -> tuple[Tensor, list[Tensor]]:
        """Node embeddings after the last graph layer, plus per-layer routing weights."""
        cfg = self.cfg
        h = x @ self.W_in + self.b_in
        routing = []
        for p in self.layers:
            if cfg.scheme == "gcn":
                h = L.gcn_layer(h, topo, p)
            elif cfg.scheme == "gat":
                h = L.gat_layer(h, topo, p)
            elif cfg.scheme == "sca":
                h = L.sca_layer(h, p, cfg.n_heads)
            elif cfg.scheme == "dca":
                h, tr = L.dca_layer(h, topo, p, cfg.n_heads)
                routing.append(tr.routing)
            else:
                h, tr = L.poladca_layer(h, topo, p, cfg.pola_activation)
                routing.append(tr.routing)
            if train and cfg.dropout > 0:
                if rng is None:
                    raise ValueError("training-mode dropout needs an rng")
                keep = (rng.random(h.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
                h = h * Tensor(keep)
        return h, routing

    def forward(self, x: Tensor, topo: Topology, train: bool = False,
                rng: np.random.Generator | None = None) -> ForwardResult:
        h, routing = self.embed(x, topo, train, rng)
        z = ops.mean(h, axis=-2)  # (B, M)
        last = len(self.head) - 1
        for k, (W, b) in enumerate(self.head):
            z = z @ W + b
            if k < last:
                z = ops.relu(z)
        return ForwardResult(z, routing)


def build_network(scheme: str, d_in: int, n_classes: int, seed: int = 0, **kw) -> Network:
    return Network(ArchConfig(scheme=scheme, d_in=d_in, n_classes=n_classes, **kw), seed)


def pola_from_dca(net: Network) -> Network:
    """PolaDCA network that shares every tensor of a trained DCA network.

    Polar weights start at the reduction point and Wo is the identity; with the
    identity output activation the result computes exactly what ``net`` does.
    """
    if net.cfg.scheme != "dca":
        raise ValueError("source network must use the dca scheme")
    cfg = dataclasses.replace(net.cfg, scheme="poladca", pola_activation="identity")
    out = Network.__new__(Network)
    out.cfg = cfg
    out.W_in, out.b_in, out.head = net.W_in, net.b_in, net.head
    out.layers = [PolaLayerParams.from_dca(p, cfg.n_heads) for p in net.layers]
    return out
