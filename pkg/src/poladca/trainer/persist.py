"""Self-describing model checkpoints."""
from __future__ import annotations

from ..graphio.graph import PreprocessConfig
from ..mplayers.network import Network
from ..numkit import checkpoint
from .config import ModelConfig


def model_meta(net: Network, cfg: ModelConfig, pre: PreprocessConfig) -> dict:
    return {"model_config": cfg.to_dict(), "preprocess": pre.to_dict(), "d_in": net.cfg.d_in}


def save_model(path, net: Network, cfg: ModelConfig, pre: PreprocessConfig) -> None:
    checkpoint.save(path, net.parameters(), model_meta(net, cfg, pre))


def load_model(path) -> tuple[Network, ModelConfig, PreprocessConfig]:
    params, meta = checkpoint.load(path)
    try:
        cfg = ModelConfig.from_dict(meta["model_config"])
        pre = PreprocessConfig(**meta["preprocess"])
        d_in = int(meta["d_in"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"checkpoint {path} lacks model metadata: {exc}") from exc
    net = Network(cfg.arch(d_in), seed=cfg.seed)
    net.load_parameters(params)
    return net, cfg, pre
