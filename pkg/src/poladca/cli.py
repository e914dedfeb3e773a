"""Command-line entry point.

Each command takes an optional JSON config of flat dotted keys (for example
``{"model.d_model": 32}``); any key can be overridden by its flag.  The
resolved config is written next to the command's outputs.

Exit codes: 0 success, 2 usage/config error, 3 numeric failure, 4 invariant
violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .diagnose import PreprocessMismatchError, stream_diagnose
from .graphio import (
    DatasetError,
    PreprocessConfig,
    generate_synthetic_dataset,
    iter_csv_rows,
    load_csv_dataset,
    records_to_samples,
    stratified_split,
    write_csv_dataset,
)
from .mplayers import IsolatedNodeError, flop_count
from .numkit import NonFiniteError
from .numkit.checkpoint import SCHEMA_VERSION
from .robustlab import (
    NoiseSpec,
    REDUCTION_TOL,
    amplification_factors,
    hierarchy_experiment,
    random_lemma_suite,
)
from .trainer import ModelConfig, TrainingDivergedError, fit, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# -- config schema ------------------------------------------------------------

def _bool(s: Any) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ints(s: Any) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).split(",") if v.strip()]


def _floats(s: Any) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).split(",") if v.strip()]


def _int(s: Any) -> int:
    if isinstance(s, float) and not s.is_integer():
        raise ValueError(f"not an integer: {s!r}")
    return int(s)


@dataclass(frozen=True)
class Key:
    name: str                 # dotted config key
    conv: Callable[[Any], Any]
    default: Any
    help: str
    flag: str | None = None   # defaults to the last dotted component

    @property
    def option(self) -> str:
        return "--" + (self.flag or self.name.rsplit(".", 1)[-1]).replace("_", "-")


_PRE_DEFAULT = PreprocessConfig()
_MODEL_DEFAULT = ModelConfig()

PRE_KEYS = [
    Key("preprocess.window_len", _int, _PRE_DEFAULT.window_len, "window length T (time steps)"),
    Key("preprocess.stride", _int, _PRE_DEFAULT.stride, "window stride s"),
    Key("preprocess.k", _int, _PRE_DEFAULT.k, "neighbours per node in the kNN graph"),
    Key("preprocess.zscore", _bool, _PRE_DEFAULT.zscore, "per-window z-score (true/false)"),
    Key("preprocess.node_mode", str, _PRE_DEFAULT.node_mode, "segments or timesteps"),
    Key("preprocess.segment_count", _int, _PRE_DEFAULT.segment_count, "nodes per window in segments mode"),
]

MODEL_KEYS = [
    Key("model.scheme", str, _MODEL_DEFAULT.scheme, "gcn | gat | sca | dca | poladca"),
    Key("model.d_model", _int, _MODEL_DEFAULT.d_model, "hidden width"),
    Key("model.n_layers", _int, _MODEL_DEFAULT.n_layers, "graph layers"),
    Key("model.n_heads", _int, _MODEL_DEFAULT.n_heads, "attention heads"),
    Key("model.n_experts", _int, _MODEL_DEFAULT.n_experts, "experts per fusion block"),
    Key("model.dropout", float, _MODEL_DEFAULT.dropout, "dropout rate after each graph layer"),
    Key("model.classifier_dims", _ints, list(_MODEL_DEFAULT.classifier_dims), "hidden sizes of the MLP head, comma separated"),
    Key("model.pola_activation", str, _MODEL_DEFAULT.pola_activation, "relu or identity after the PolaDCA output projection"),
    Key("model.epochs", _int, _MODEL_DEFAULT.epochs, "maximum epochs"),
    Key("model.batch_size", _int, _MODEL_DEFAULT.batch_size, "graphs per batch"),
    Key("model.lr", float, _MODEL_DEFAULT.lr, "initial learning rate"),
    Key("model.weight_decay", float, _MODEL_DEFAULT.weight_decay, "L2 coefficient"),
    Key("model.lr_decay", float, _MODEL_DEFAULT.lr_decay, "learning-rate decay factor"),
    Key("model.lr_decay_every", _int, _MODEL_DEFAULT.lr_decay_every, "epochs between decays"),
    Key("model.patience", _int, _MODEL_DEFAULT.patience, "early-stopping patience (epochs)"),
    Key("model.noise_sigma", float, _MODEL_DEFAULT.noise_sigma, "feature-noise std added to training batches"),
]

SEED = Key("seed", _int, 0, "random seed")

GENDATA_KEYS = [
    Key("data.n_classes", _int, 5, "number of classes"),
    Key("data.samples_per_class", _int, 40, "records per class"),
    Key("data.n_channels", _int, 2, "sensor channels per record"),
    Key("data.amplitude", float, 1.5, "periodic component amplitude"),
    Key("preprocess.window_len", _int, _PRE_DEFAULT.window_len, "record length (one window)"),
    Key("seed", _int, 7, "random seed"),
]

TRAIN_KEYS = [Key("data.manifest", str, None, "dataset manifest JSON", flag="manifest"),
              *PRE_KEYS, *MODEL_KEYS, SEED]

DIAGNOSE_KEYS = [
    Key("checkpoint", str, None, "trained checkpoint JSON"),
    Key("input", str, "-", "CSV stream (header + one row per step); '-' for stdin"),
    # preprocessing flags default to the checkpoint's values; any explicit value must agree
    *[Key(k.name, k.conv, None, k.help + " (must match the checkpoint)") for k in PRE_KEYS],
]

ROBUST_KEYS = [
    Key("suite", str, "lemmas", "flops | lemmas | gamma | hierarchy"),
    Key("flops.n", _int, 10, "node count for the FLOP model", flag="n"),
    Key("flops.d", _int, 64, "feature width for the FLOP model", flag="d"),
    Key("lemmas.trials", _int, 1000, "randomised trials per bound", flag="trials"),
    Key("gamma.alpha", _floats, [0.5, 0.5], "attention weights, comma separated", flag="alpha"),
    Key("gamma.rho", float, 1.0, "pairwise noise correlation", flag="rho"),
    Key("hierarchy.manifest", str, None, "dataset manifest (default: synthetic 5x40)", flag="manifest"),
    Key("hierarchy.sigma", float, 0.3, "feature-noise std", flag="sigma"),
    Key("hierarchy.seeds", _int, 5, "number of seeds", flag="seeds"),
    Key("hierarchy.noise_trials", _int, 10, "noise draws per held-out graph", flag="noise_trials"),
    Key("hierarchy.n_eval", _int, 10, "held-out graphs per seed", flag="n_eval"),
    Key("model.d_model", _int, 32, "hidden width"),
    Key("model.epochs", _int, 20, "maximum epochs"),
    SEED,
]


def _add_keys(p: argparse.ArgumentParser, keys: list[Key]) -> None:
    for k in keys:
        default = "" if k.default is None else f" (default {k.default})"
        p.add_argument(k.option, dest=k.name, default=None, metavar=k.name.rsplit(".", 1)[-1].upper(),
                       help=k.help + default)


def resolve_config(args: argparse.Namespace, keys: list[Key]) -> dict[str, Any]:
    """defaults <- config file <- flags, with type conversion and unknown-key rejection."""
    known = {k.name: k for k in keys}
    cfg = {k.name: k.default for k in keys}
    if args.config:
        try:
            blob = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(blob, dict):
            raise ConfigError(f"{args.config}: expected a JSON object of dotted keys")
        unknown = sorted(set(blob) - set(known))
        if unknown:
            raise ConfigError(f"{args.config}: unknown config keys {unknown}")
        cfg.update(blob)
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            cfg[name] = v
    out = {}
    for name, v in cfg.items():
        try:
            out[name] = None if v is None else known[name].conv(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {exc}") from None
    return out


def _section(cfg: dict, prefix: str) -> dict:
    return {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith(prefix + ".") and v is not None}


def _prepare_out(path: str | None) -> Path:
    if not path:
        raise ConfigError("--out is required")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def _write_resolved(out: Path, command: str, cfg: dict) -> None:
    doc = {"command": command, "version": __version__, **cfg}
    (out / "resolved_config.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _preprocess(cfg: dict) -> PreprocessConfig:
    return PreprocessConfig(**_section(cfg, "preprocess"))


# -- commands -------------------------------------------------------------------

def cmd_gendata(args) -> int:
    cfg = resolve_config(args, GENDATA_KEYS)
    out = _prepare_out(args.out)
    data = _section(cfg, "data")
    records = generate_synthetic_dataset(data["n_classes"], data["samples_per_class"],
                                         length=cfg["preprocess.window_len"],
                                         seed=cfg["seed"], n_channels=data["n_channels"],
                                         amplitude=data["amplitude"])
    manifest = write_csv_dataset(records, out)
    _write_resolved(out, "gendata", cfg)
    counts = np.bincount([r.label for r in records], minlength=data["n_classes"])
    print(f"wrote {len(records)} records to {manifest}")
    for c, n in enumerate(counts):
        print(f"class {c}: {n}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args, TRAIN_KEYS)
    if not cfg["data.manifest"]:
        raise ConfigError("--manifest is required")
    out = _prepare_out(args.out)
    pre = _preprocess(cfg)
    records = load_csv_dataset(cfg["data.manifest"])
    samples = records_to_samples(records, pre)
    labels = [s.label for s in samples]
    mcfg = ModelConfig(n_classes=int(max(labels)) + 1, seed=cfg["seed"], **_section(cfg, "model"))
    split = stratified_split(labels, cfg["seed"])
    net, report = fit(samples, mcfg, split, verbose=args.verbose)
    save_model(out / "checkpoint.json", net, mcfg, pre)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "confusion.csv").write_text(report.confusion_csv())
    (out / "split.json").write_text(json.dumps(
        {"train": list(split.train), "val": list(split.val), "test": list(split.test)}) + "\n")
    _write_resolved(out, "train", cfg)
    print(f"scheme {mcfg.scheme}: test acc {report.test_acc:.4f}, macro-F1 {report.test_macro_f1:.4f}, "
          f"best epoch {report.best_epoch}, stopped at {report.stopped_epoch}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cfg = resolve_config(args, DIAGNOSE_KEYS)
    if not cfg["checkpoint"]:
        raise ConfigError("--checkpoint is required")
    if not Path(cfg["checkpoint"]).is_file():
        raise ConfigError(f"checkpoint not found: {cfg['checkpoint']}")
    net, _, pre = load_model(cfg["checkpoint"])
    overrides = _section(cfg, "preprocess")
    try:
        stream_pre = PreprocessConfig(**{**pre.to_dict(), **overrides})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    src = sys.stdin if cfg["input"] == "-" else _open_input(cfg["input"])
    sink = sys.stdout if not args.out or args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        for em in stream_diagnose(iter_csv_rows(src), net, pre, stream_pre):
            sink.write(json.dumps(em.to_dict()) + "\n")
    finally:
        if src is not sys.stdin:
            src.close()
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


def _open_input(path: str):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc.strerror}") from None


def cmd_robust(args) -> int:
    cfg = resolve_config(args, ROBUST_KEYS)
    suite = cfg["suite"]
    out = _prepare_out(args.out) if args.out else None
    result: dict[str, Any] = {"suite": suite}
    status = EXIT_OK
    if suite == "flops":
        n, d = cfg["flops.n"], cfg["flops.d"]
        vals = {s: flop_count(s, n, d) for s in ("SCA", "DCA", "PolaDCA")}
        for s, v in vals.items():
            print(f"{s} {v}")
        result.update(n=n, d=d, flops=vals)
    elif suite == "lemmas":
        rep = random_lemma_suite(cfg["lemmas.trials"], seed=cfg["seed"])
        for name, t in rep.tallies.items():
            print(f"{name}: trials {t.trials}, violations {t.violations}, worst ratio {t.worst_ratio:.6g}")
        print(f"violations: {rep.total_violations}")
        result["lemmas"] = rep.to_dict()
        result["violations"] = rep.total_violations
        if rep.total_violations:
            status = EXIT_INVARIANT
    elif suite == "gamma":
        amp = amplification_factors(cfg["gamma.alpha"], cfg["gamma.rho"])
        print(f"gamma {amp.gamma:.6g}")
        print(f"gamma_pol {amp.gamma_pol:.6g}")
        if amp.clamped or amp.clamped_pol:
            print("note: a negative radicand was clamped to 0")
        result.update(alpha=cfg["gamma.alpha"], rho=cfg["gamma.rho"], **amp.to_dict())
    elif suite == "hierarchy":
        pre = PreprocessConfig()
        if cfg["hierarchy.manifest"]:
            records = load_csv_dataset(cfg["hierarchy.manifest"])
        else:
            records = generate_synthetic_dataset(5, 40, pre, seed=7)
        samples = records_to_samples(records, pre)
        mcfg = ModelConfig(n_classes=max(s.label for s in samples) + 1,
                           d_model=cfg["model.d_model"], epochs=cfg["model.epochs"])
        seeds = [cfg["seed"] + i for i in range(cfg["hierarchy.seeds"])]
        rep = hierarchy_experiment(samples, mcfg, NoiseSpec(cfg["hierarchy.sigma"], seed=cfg["seed"]),
                                   seeds, trials=cfg["hierarchy.noise_trials"], n_eval=cfg["hierarchy.n_eval"])
        med, anti = rep.median_lipschitz("lip_iid"), rep.median_lipschitz("lip_anti")
        for k in med:
            print(f"{k}: median L_iid {med[k]:.6g}, median L_anticorrelated {anti[k]:.6g}")
        print(f"ordering poladca <= dca <= gcn: {rep.ordering_holds()}")
        print(f"anti-correlated poladca < dca in {rep.pola_below_dca_fraction():.0%} of seeds")
        print(f"reduction control gap: {rep.max_reduction_gap:.3e}")
        result["report"] = rep.to_dict()
        if not rep.max_reduction_gap <= REDUCTION_TOL:
            status = EXIT_INVARIANT
        if out:
            (out / "hierarchy.csv").write_text(rep.to_csv())
    else:
        raise ConfigError(f"unknown suite {suite!r}; choose flops, lemmas, gamma or hierarchy")
    if out:
        (out / f"robust_{suite}.json").write_text(json.dumps(result, indent=2, default=_jsonable) + "\n")
        _write_resolved(out, "robust", cfg)
    return status


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return None if not math.isfinite(v) else float(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poladca", description="Graph fault classification with DCA/PolaDCA attention.")
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__} (checkpoint schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help_, keys, func, out_help):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="JSON file of dotted config keys")
        sp.add_argument("--out", help=out_help)
        _add_keys(sp, keys)
        sp.set_defaults(func=func)
        return sp

    command("gendata", "write a synthetic CSV dataset and manifest", GENDATA_KEYS, cmd_gendata,
            "output directory")
    tr = command("train", "train a model on a manifest dataset", TRAIN_KEYS, cmd_train, "output directory")
    tr.add_argument("--verbose", action="store_true", help="print per-epoch losses")
    command("diagnose", "stream a CSV through a checkpoint, one JSON line per window", DIAGNOSE_KEYS,
            cmd_diagnose, "JSON-lines output file (default stdout)")
    command("robust", "run a robustness / cost suite", ROBUST_KEYS, cmd_robust,
            "optional directory for the JSON report")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, PreprocessMismatchError, IsolatedNodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, NonFiniteError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
