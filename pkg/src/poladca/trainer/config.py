from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..mplayers.network import SCHEMES, ArchConfig


@dataclass(frozen=True)
class ModelConfig:
    n_classes: int = 5
    scheme: str = "poladca"
    d_model: int = 64
    n_layers: int = 3
    n_heads: int = 4
    n_experts: int = 3
    dropout: float = 0.01
    classifier_dims: tuple[int, ...] = (128, 64)
    pola_activation: str = "relu"
    epochs: int = 50
    batch_size: int = 16
    lr: float = 1e-3
    weight_decay: float = 5e-4
    lr_decay: float = 0.5
    lr_decay_every: int = 20
    patience: int = 20
    seed: int = 0
    noise_sigma: float = 0.0  # std of feature noise added to every training batch

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.lower())
        object.__setattr__(self, "classifier_dims", tuple(int(d) for d in self.classifier_dims))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        for name in ("epochs", "batch_size", "lr_decay_every", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr <= 0 or self.weight_decay < 0 or not 0 < self.lr_decay <= 1:
            raise ValueError("lr > 0, weight_decay >= 0 and 0 < lr_decay <= 1 required")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def arch(self, d_in: int) -> ArchConfig:
        return ArchConfig(
            scheme=self.scheme, d_in=d_in, n_classes=self.n_classes, d_model=self.d_model,
            n_layers=self.n_layers, n_heads=self.n_heads, n_experts=self.n_experts,
            dropout=self.dropout, classifier_dims=self.classifier_dims,
            pola_activation=self.pola_activation,
        )

    def lr_at(self, epoch: int) -> float:
        """Step-decayed rate for a 0-indexed epoch."""
        return self.lr * self.lr_decay ** (epoch // self.lr_decay_every)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classifier_dims"] = list(self.classifier_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise KeyError(f"unknown model config keys: {unknown}")
        return cls(**d)
