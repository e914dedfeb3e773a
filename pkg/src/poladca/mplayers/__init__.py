"""Graph message-passing layers (DCA, PolaDCA, GCN, GAT, SCA) and the classifier network."""
from .layers import (
    LayerTrace,
    LocalFeatures,
    dca_attend,
    dca_layer,
    dual_path_fuse,
    expert_fusion,
    flop_count,
    gat_layer,
    gcn_layer,
    local_features,
    merge_heads,
    poladca_attend,
    poladca_layer,
    polar_decompose,
    polar_scores,
    sca_attend,
    sca_layer,
    split_heads,
)
from .network import SCHEMES, ArchConfig, ForwardResult, Network, build_network, pola_from_dca
from .params import (
    POLAR_INIT,
    DcaLayerParams,
    ExpertParams,
    GatParams,
    GcnParams,
    PolaLayerParams,
    ScaParams,
)
from .topology import IsolatedNodeError, Topology

__all__ = [
    "POLAR_INIT",
    "SCHEMES",
    "ArchConfig",
    "DcaLayerParams",
    "ExpertParams",
    "ForwardResult",
    "GatParams",
    "GcnParams",
    "IsolatedNodeError",
    "LayerTrace",
    "LocalFeatures",
    "Network",
    "PolaLayerParams",
    "ScaParams",
    "Topology",
    "build_network",
    "dca_attend",
    "dca_layer",
    "dual_path_fuse",
    "expert_fusion",
    "flop_count",
    "gat_layer",
    "gcn_layer",
    "local_features",
    "merge_heads",
    "pola_from_dca",
    "poladca_attend",
    "poladca_layer",
    "polar_decompose",
    "polar_scores",
    "sca_attend",
    "sca_layer",
    "split_heads",
]
