"""Learnable parameter containers and their initialisation.

Matrices follow the row-vector convention of the layer equations: projections
``W`` of shape (in, out) are applied as ``x @ W``; gate, expert and output
matrices of shape (out, in) are applied as ``x @ W.T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numkit import Tensor

POLAR_INIT = (1.0, 1.0, -1.0, -1.0)


def xavier(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int,
           name: str | None = None) -> Tensor:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def zeros(shape: tuple[int, ...], name: str | None = None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class ExpertParams:
    W1: Tensor
    b1: Tensor
    W2: Tensor
    b2: Tensor
    route: Tensor

    @classmethod
    def init(cls, rng, M: int) -> "ExpertParams":
        return cls(
            W1=xavier(rng, (M, M), M, M),
            b1=zeros((M,)),
            W2=xavier(rng, (M, M), M, M),
            b2=zeros((M,)),
            route=xavier(rng, (M,), M, 1),
        )

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}/{k}": getattr(self, k) for k in ("W1", "b1", "W2", "b2", "route")}


@dataclass
class DcaLayerParams:
    Wx: Tensor
    Wy: Tensor
    Wz: Tensor
    Wg: Tensor
    bg: Tensor
    experts: list[ExpertParams] = field(default_factory=list)

    @classmethod
    def init(cls, rng, D: int, M: int, n_experts: int = 3) -> "DcaLayerParams":
        if n_experts < 1:
            raise ValueError("need at least one expert")
        return cls(
            Wx=xavier(rng, (D, M), D, M),
            Wy=xavier(rng, (D, M), D, M),
            Wz=xavier(rng, (D, M), D, M),
            Wg=xavier(rng, (M, 2 * M), 2 * M, M),
            bg=zeros((M,)),
            experts=[ExpertParams.init(rng, M) for _ in range(n_experts)],
        )

    @property
    def n_experts(self) -> int:
        return len(self.experts)

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = {f"{prefix}/{k}": getattr(self, k) for k in ("Wx", "Wy", "Wz", "Wg", "bg")}
        for e, ex in enumerate(self.experts):
            out.update(ex.named(f"{prefix}/expert{e}"))
        return out


@dataclass
class PolaLayerParams(DcaLayerParams):
    wpp: Tensor = None
    wnn: Tensor = None
    wpn: Tensor = None
    wnp: Tensor = None
    Wo: Tensor = None

    @classmethod
    def init(cls, rng, D: int, M: int, n_experts: int = 3, heads: int = 4) -> "PolaLayerParams":
        if M % heads:
            raise ValueError(f"hidden width {M} not divisible by {heads} heads")
        base = DcaLayerParams.init(rng, D, M, n_experts)
        pp, nn, pn, np_ = (Tensor(np.full(heads, v), requires_grad=True) for v in POLAR_INIT)
        return cls(base.Wx, base.Wy, base.Wz, base.Wg, base.bg, base.experts,
                   wpp=pp, wnn=nn, wpn=pn, wnp=np_, Wo=xavier(rng, (M, M), M, M))

    @classmethod
    def from_dca(cls, p: DcaLayerParams, heads: int, Wo: Tensor | None = None,
                 weights=POLAR_INIT) -> "PolaLayerParams":
        """Share every DCA tensor; add polar weights and an output projection."""
        M = p.Wx.shape[1]
        ws = [Tensor(np.full(heads, float(v)), requires_grad=True) for v in weights]
        Wo = Wo if Wo is not None else Tensor(np.eye(M), requires_grad=True)
        return cls(p.Wx, p.Wy, p.Wz, p.Wg, p.bg, p.experts, *ws, Wo=Wo)

    @property
    def heads(self) -> int:
        return self.wpp.shape[0]

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = super().named(prefix)
        for k in ("wpp", "wnn", "wpn", "wnp", "Wo"):
            out[f"{prefix}/{k}"] = getattr(self, k)
        return out


@dataclass
class GcnParams:
    W: Tensor

    @classmethod
    def init(cls, rng, D: int, M: int) -> "GcnParams":
        return cls(xavier(rng, (D, M), D, M))

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}/W": self.W}


@dataclass
class GatParams:
    W: Tensor
    a: Tensor

    @classmethod
    def init(cls, rng, D: int, M: int) -> "GatParams":
        return cls(xavier(rng, (D, M), D, M), xavier(rng, (2 * M,), 2 * M, 1))

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}/W": self.W, f"{prefix}/a": self.a}


@dataclass
class ScaParams:
    Wq: Tensor
    Wk: Tensor
    Wv: Tensor

    @classmethod
    def init(cls, rng, D: int, M: int) -> "ScaParams":
        return cls(*(xavier(rng, (D, M), D, M) for _ in range(3)))

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}/Wq": self.Wq, f"{prefix}/Wk": self.Wk, f"{prefix}/Wv": self.Wv}
