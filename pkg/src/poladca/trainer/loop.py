"""Offline training loop and the per-sample evaluation path."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..graphio.dataset import Split, stratified_split
from ..graphio.graph import GraphSample
from ..mplayers.network import Network
from ..mplayers.topology import Topology
from ..numkit import NonFiniteError, Tape, Tensor, backward
from .config import ModelConfig
from .metrics import evaluate_metrics
from .optim import AdamState, adam_step, nll_loss


class TrainingDivergedError(FloatingPointError):
    pass


class GraphBatchData:
    """Dense stacks of features, adjacency and labels for fast batching."""

    def __init__(self, samples: Sequence[GraphSample]):
        if not samples:
            raise ValueError("empty sample set")
        if len({s.node_features.shape for s in samples}) != 1:
            raise ValueError("all samples must share one (n, D) shape")
        self.samples = list(samples)
        self.X = np.stack([s.node_features for s in samples])
        self.A = np.stack([s.adjacency() for s in samples])
        self.y = np.array([s.label for s in samples], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.samples)

    def batch(self, idx) -> tuple[Tensor, Topology, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        return Tensor(self.X[idx]), Topology(self.A[idx]), self.y[idx]


def sample_logits(net: Network, sample: GraphSample) -> np.ndarray:
    """Inference on one graph (batch of 1, dropout off).  Shared by every evaluation path."""
    x = Tensor(sample.node_features[None])
    topo = Topology(sample.adjacency()[None])
    return net.forward(x, topo).logits.data[0].copy()


def predict_logits(net: Network, samples: Sequence[GraphSample]) -> np.ndarray:
    return np.stack([sample_logits(net, s) for s in samples])


def _batched_loss(net: Network, data: GraphBatchData, idx, batch_size: int) -> float:
    """Mean NLL over ``idx`` without a tape."""
    total = 0.0
    for start in range(0, len(idx), batch_size):
        x, topo, y = data.batch(idx[start:start + batch_size])
        total += nll_loss(net.forward(x, topo).logits, y).item() * len(y)
    return total / len(idx)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_epoch: int = -1
    test_acc: float = float("nan")
    test_macro_f1: float = float("nan")
    confusion: list[list[int]] = field(default_factory=list)
    n_train: int = 0
    n_val: int = 0
    n_test: int = 0

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_acc": self.val_acc,
            "lr": self.lr,
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
            "test_acc": self.test_acc,
            "test_macro_f1": self.test_macro_f1,
            "confusion": self.confusion,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        K = len(self.confusion)
        w.writerow(["true\\pred", *range(K)])
        for i, row in enumerate(self.confusion):
            w.writerow([i, *row])
        return buf.getvalue()


def perturb_batch(x: Tensor, sigma: float, rng: np.random.Generator) -> Tensor:
    if sigma <= 0:
        return x
    return Tensor(x.data + sigma * rng.standard_normal(x.shape))


def train_step(net: Network, state: AdamState, x: Tensor, topo: Topology, y: np.ndarray,
               cfg: ModelConfig, lr: float, rng: np.random.Generator) -> float:
    params = net.parameters()
    for p in params.values():
        p.grad = None
    try:
        with Tape() as tape:
            loss = nll_loss(net.forward(x, topo, train=True, rng=rng).logits, y)
        grads = backward(tape, loss, params.values())
    except NonFiniteError as exc:
        raise TrainingDivergedError(f"non-finite value during training step: {exc}") from exc
    adam_step(params, {k: grads[t] for k, t in params.items()}, state, lr,
              weight_decay=cfg.weight_decay)
    return loss.item()


def fit(samples: Sequence[GraphSample], cfg: ModelConfig, split: Split | None = None,
        verbose: bool = False) -> tuple[Network, TrainReport]:
    """Train ``cfg.scheme`` on ``samples``; returns the best-validation network and its report."""
    data = GraphBatchData(samples)
    if split is None:
        split = stratified_split(data.y, cfg.seed)
    train_idx = np.asarray(split.train, dtype=np.int64)
    val_idx = np.asarray(split.val, dtype=np.int64)
    test_idx = np.asarray(split.test, dtype=np.int64)
    if not len(train_idx) or not len(val_idx) or not len(test_idx):
        raise ValueError("train, validation and test splits must all be non-empty")
    if data.y.max() >= cfg.n_classes:
        raise ValueError(f"label {data.y.max()} exceeds n_classes={cfg.n_classes}")

    net = Network(cfg.arch(data.X.shape[-1]), seed=cfg.seed)
    state = AdamState()
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    dropout_rng = np.random.default_rng([cfg.seed, 2])
    noise_rng = np.random.default_rng([cfg.seed, 3])

    report = TrainReport(n_train=len(train_idx), n_val=len(val_idx), n_test=len(test_idx))
    best_val, best_params, stale = np.inf, net.snapshot(), 0
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = train_idx[shuffle_rng.permutation(len(train_idx))]
        running = 0.0
        for start in range(0, len(order), cfg.batch_size):
            x, topo, y = data.batch(order[start:start + cfg.batch_size])
            x = perturb_batch(x, cfg.noise_sigma, noise_rng)
            running += train_step(net, state, x, topo, y, cfg, lr, dropout_rng) * len(y)
        train_loss = running / len(order)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(f"training loss became {train_loss} at epoch {epoch}")
        val_loss = _batched_loss(net, data, val_idx, cfg.batch_size)
        val_pred = predict_logits(net, [data.samples[i] for i in val_idx]).argmax(axis=1)
        val_acc = float(np.mean(val_pred == data.y[val_idx]))
        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        report.val_acc.append(val_acc)
        report.lr.append(lr)
        report.stopped_epoch = epoch
        if verbose:
            print(f"epoch {epoch:3d} lr {lr:.2e} train {train_loss:.4f} val {val_loss:.4f} acc {val_acc:.3f}")
        if val_loss < best_val:
            best_val, best_params, stale = val_loss, net.snapshot(), 0
            report.best_epoch = epoch
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    net.load_parameters(best_params)
    test_samples = [data.samples[i] for i in test_idx]
    pred = predict_logits(net, test_samples).argmax(axis=1)
    m = evaluate_metrics(pred, data.y[test_idx], cfg.n_classes)
    report.test_acc = m["acc"]
    report.test_macro_f1 = m["macro_f1"]
    report.confusion = m["confusion"].tolist()
    return net, report
