"""CSV + JSON-manifest ingestion and export.

Manifest: JSON array of ``{"csv": path, "label": int, "channels": [column, ...]}``;
relative paths resolve against the manifest's directory.  Each CSV has a header
row and one row per time step.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .signals import DatasetError, SignalRecord


def _fmt(v: float) -> str:
    return repr(float(v))


def read_csv_columns(path: str | os.PathLike, channels: Sequence[str] | None = None) -> np.ndarray:
    """Return selected columns as an (m, L) array."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing CSV file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file (no header)") from None
        header = [h.strip() for h in header]
        cols = list(channels) if channels else header
        missing = [c for c in cols if c not in header]
        if missing:
            raise DatasetError(f"{path}: columns {missing} not in header {header}")
        idx = [header.index(c) for c in cols]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {lineno} has {len(row)} columns, header has {len(header)}"
                )
            vals = []
            for j in idx:
                try:
                    v = float(row[j])
                except ValueError:
                    raise DatasetError(
                        f"{path}: non-numeric cell {row[j]!r} at row {lineno}, column {j + 1} ({header[j]})"
                    ) from None
                if not np.isfinite(v):
                    raise DatasetError(f"{path}: non-finite cell at row {lineno}, column {j + 1}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64).T


def load_csv_dataset(manifest_path: str | os.PathLike) -> tuple[SignalRecord, ...]:
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DatasetError(f"missing manifest: {manifest_path}")
    try:
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{manifest_path}: invalid JSON ({exc})") from None
    if not isinstance(entries, list):
        raise DatasetError(f"{manifest_path}: manifest must be a JSON array")
    base = manifest_path.parent
    records = []
    for n, entry in enumerate(entries):
        try:
            csv_path, label = entry["csv"], int(entry["label"])
        except (KeyError, TypeError, ValueError):
            raise DatasetError(f"{manifest_path}: entry {n} needs 'csv' and integer 'label'") from None
        full = Path(csv_path) if os.path.isabs(csv_path) else base / csv_path
        records.append(SignalRecord(read_csv_columns(full, entry.get("channels")), label))
    return tuple(records)


def write_csv_dataset(records: Sequence[SignalRecord], out_dir: str | os.PathLike,
                      manifest_name: str = "manifest.json") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    width = len(str(max(len(records) - 1, 0)))
    for i, rec in enumerate(records):
        name = f"record_{i:0{width}d}.csv"
        channels = [f"ch{c}" for c in range(rec.n_channels)]
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(channels)
            for row in rec.channels.T:
                w.writerow([_fmt(v) for v in row])
        manifest.append({"csv": name, "label": rec.label, "channels": channels})
    path = out / manifest_name
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path


def iter_csv_rows(lines: Iterable[str], channels: Sequence[str] | None = None) -> Iterator[np.ndarray]:
    """Stream rows of a header-first CSV as float vectors (one time step each)."""
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return
    cols = list(channels) if channels else header
    missing = [c for c in cols if c not in header]
    if missing:
        raise DatasetError(f"stream columns {missing} not in header {header}")
    idx = [header.index(c) for c in cols]
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(f"stream row {lineno} has {len(row)} columns, header has {len(header)}")
        try:
            yield np.array([float(row[j]) for j in idx])
        except ValueError:
            raise DatasetError(f"non-numeric cell in stream row {lineno}") from None
