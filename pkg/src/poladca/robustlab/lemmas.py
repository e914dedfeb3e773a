"""Direct evaluation of the feature and attention perturbation bounds.

Bounds checked per node i, with eta the node-feature noise, B_W the largest
spectral norm among the consensus/diversity projections and N(i) the
neighbourhood:

* consensus:  ||d f_y(i)|| <= B_W * mean_j ||eta_j||
* diversity:  ||d f_z(i)|| <= sqrt(2) * B_W * sqrt(mean_j ||eta_j||^2)
* attention:  ||d out_i|| <= (||a'_i|| max_j||d b_j|| + max_j||b_j|| ||d a_i||) * M / sqrt(d_k)
                            + max_j ||d c_j||
  for out = softmax(a b^T / sqrt(d_k)) c on the consensus path (a = F_x,
  b = F_y, c = F_z), M the largest row norm over clean and perturbed inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graphio.graph import GraphSample, build_knn_graph
from ..mplayers.layers import dca_attend, local_features
from ..mplayers.params import DcaLayerParams
from ..mplayers.topology import Topology
from ..numkit import Tensor
from .lipschitz import spectral_norm
from .noise import NoiseSpec, draw_noise

SLACK = 1e-9
LEMMAS = ("consensus", "diversity", "attention")


@dataclass
class LemmaTally:
    trials: int = 0
    violations: int = 0
    worst_ratio: float = 0.0  # max lhs / rhs over checked nodes (rhs > 0)
    worst_excess: float = -math.inf

    def update(self, lhs: np.ndarray, rhs: np.ndarray) -> None:
        self.trials += 1
        excess = lhs - rhs
        if (excess > SLACK).any():
            self.violations += 1
        self.worst_excess = max(self.worst_excess, float(excess.max()))
        pos = rhs > 0
        if pos.any():
            self.worst_ratio = max(self.worst_ratio, float((lhs[pos] / rhs[pos]).max()))

    def merge(self, other: "LemmaTally") -> None:
        self.trials += other.trials
        self.violations += other.violations
        self.worst_ratio = max(self.worst_ratio, other.worst_ratio)
        self.worst_excess = max(self.worst_excess, other.worst_excess)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "worst_excess": self.worst_excess if np.isfinite(self.worst_excess) else None,
        }


@dataclass
class LemmaReport:
    tallies: dict[str, LemmaTally] = field(default_factory=lambda: {k: LemmaTally() for k in LEMMAS})

    @property
    def total_violations(self) -> int:
        return sum(t.violations for t in self.tallies.values())

    def merge(self, other: "LemmaReport") -> None:
        for k in LEMMAS:
            self.tallies[k].merge(other.tallies[k])

    def to_dict(self) -> dict:
        return {k: t.to_dict() for k, t in self.tallies.items()}


def _features(x: np.ndarray, topo: Topology, p: DcaLayerParams):
    F = local_features(Tensor(x[None]), topo, p)
    return F.Fx.data[0], F.Fy.data[0], F.Fz.data[0]


def _rownorm(a: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a, axis=-1)


def bound_terms(x: np.ndarray, eta: np.ndarray, topo: Topology, p: DcaLayerParams,
                B_W: float) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-node (lhs, rhs) arrays for each bound."""
    A = topo.adj[0]
    deg = A.sum(axis=1)
    en = _rownorm(eta)
    mean_norm = (A @ en) / deg
    rms_norm = np.sqrt((A @ en ** 2) / deg)

    ax, ay, az = _features(x, topo, p)
    bx, by, bz = _features(x + eta, topo, p)
    out = {
        "consensus": (_rownorm(by - ay), B_W * mean_norm),
        "diversity": (_rownorm(bz - az), math.sqrt(2.0) * B_W * rms_norm),
    }

    d_k = ax.shape[1]
    clean = dca_attend(Tensor(ax), Tensor(ay), Tensor(az)).data
    noisy = dca_attend(Tensor(bx), Tensor(by), Tensor(bz)).data
    M = max(_rownorm(m).max() for m in (ax, ay, az, bx, by, bz))
    db = _rownorm(by - ay).max()
    dc = _rownorm(bz - az).max()
    rhs = (_rownorm(bx) * db + _rownorm(ay).max() * _rownorm(bx - ax)) * M / math.sqrt(d_k) + dc
    out["attention"] = (_rownorm(noisy - clean), rhs)
    return out


def projection_bound(p: DcaLayerParams) -> float:
    return max(spectral_norm(p.Wy.data), spectral_norm(p.Wz.data))


def check_lemma_bounds(sample: GraphSample, params: DcaLayerParams, spec: NoiseSpec,
                       trials: int) -> LemmaReport:
    """Draw ``trials`` noise realisations on one graph and tally bound violations."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    topo = Topology(sample.adjacency()[None])
    topo.require_neighbors()
    B_W = projection_bound(params)
    x = sample.node_features
    rng = spec.rng()
    rep = LemmaReport()
    for _ in range(trials):
        eta = draw_noise(x.shape, spec, rng)
        for name, (lhs, rhs) in bound_terms(x, eta, topo, params, B_W).items():
            rep.tallies[name].update(lhs, rhs)
    return rep


def random_lemma_suite(trials: int = 1000, seed: int = 0, max_nodes: int = 8,
                       max_dim: int = 8) -> LemmaReport:
    """Independent random graph, parameters and noise level per trial."""
    rng = np.random.default_rng(seed)
    rep = LemmaReport()
    for t in range(trials):
        n = int(rng.integers(2, max_nodes + 1))
        D = int(rng.integers(1, max_dim + 1))
        M = int(rng.integers(1, max_dim + 1))
        x = rng.standard_normal((n, D)) * rng.uniform(0.1, 3.0)
        k = int(rng.integers(1, n))
        sample = GraphSample(x, build_knn_graph(x, k), 0)
        params = DcaLayerParams.init(rng, D, M, n_experts=1)
        spec = NoiseSpec(float(rng.uniform(0.01, 2.0)), seed=int(rng.integers(2**32)))
        rep.merge(check_lemma_bounds(sample, params, spec, 1))
    return rep
