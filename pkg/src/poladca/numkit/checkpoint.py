"""JSON checkpoint: parameter path -> {"shape", "data"}.

Floats are written with ``repr`` (shortest round-trip form), so a dump/load
cycle is bit-exact.
"""
from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np

from .tensor import Tensor

SCHEMA_VERSION = 1


def params_to_dict(params: Mapping[str, Tensor]) -> dict[str, Any]:
    return {
        path: {"shape": list(t.shape), "data": [float(v) for v in t.data.reshape(-1)]}
        for path, t in params.items()
    }


def params_from_dict(blob: Mapping[str, Any]) -> dict[str, Tensor]:
    out = {}
    for path, entry in blob.items():
        shape = tuple(int(s) for s in entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"{path}: {data.size} values for shape {shape}")
        out[path] = Tensor(data.reshape(shape), requires_grad=True, name=path)
    return out


def dumps(params: Mapping[str, Tensor], meta: Mapping[str, Any] | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "params": params_to_dict(params)}
    if meta:
        doc["meta"] = dict(meta)
    return json.dumps(doc, allow_nan=False)


def loads(text: str) -> tuple[dict[str, Tensor], dict[str, Any]]:
    doc = json.loads(text)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported checkpoint schema {version!r}")
    return params_from_dict(doc["params"]), doc.get("meta", {})


def save(path, params: Mapping[str, Tensor], meta: Mapping[str, Any] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(params, meta))


def load(path) -> tuple[dict[str, Tensor], dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
