"""Command line entry points: synth | train | evaluate | sweep | importance.

Every command is deterministic given its inputs and seed, writes files
atomically, and drops a sidecar run manifest (<out-base>.manifest.json)
fingerprinting the data and listing the produced files. Exit codes:
0 success, 1 data/runtime failure, 2 usage or configuration error.
File layouts are documented in FORMATS.md.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import synthetic
from .data import ColumnSchema, load_csv, train_test_split
from .errors import ConfigError, DataError, MetricError, SchemaError, TrainingError
from .metrics import fairness_report, group_score_histograms, permutation_importance
from .training import TrainConfig, classify, load_model, save_model, train
from .util import substream_seed, write_atomic


def _fmt(x) -> str:
    return f"{x:.6g}"


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _base(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix else p


def _sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _read_config(path, seed_override=None) -> TrainConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if seed_override is not None:
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d["seed"] = seed_override
    return TrainConfig.from_dict(d)


def _write_manifest(base: Path, command, config, seed, dataset_info, outputs, t0) -> Path:
    path = Path(str(base) + ".manifest.json")
    manifest = {
        "command": command,
        "config": config,
        "dataset": dataset_info,
        "duration_s": round(time.monotonic() - t0, 6),
        "outputs": [str(p) for p in outputs],
        "seed": seed,
    }
    write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load_dataset_for_model(model, data_path):
    if model.schema is None:
        raise ConfigError("model file carries no column schema; cannot decode the data file")
    ds = load_csv(data_path, ColumnSchema.from_dict(model.schema))
    if ds.feature_names != model.feature_names:
        raise DataError(
            f"feature names in {data_path} ({ds.feature_names}) do not match "
            f"the model ({model.feature_names})"
        )
    return ds


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    t0 = time.monotonic()
    ds, latents = synthetic.generate(
        args.n, args.seed, noise_variance=args.noise_variance, return_latents=True
    )
    rows = [
        [
            str(int(ds.features[i, 0])),
            _fmt(ds.features[i, 1]),
            str(int(ds.sensitive[i])),
            str(int(ds.labels[i])),
        ]
        for i in range(ds.n)
    ]
    csv_text = _csv_text(["color", "age", "gender", "claim"], rows)
    write_atomic(args.out, csv_text)

    base = _base(args.out)
    latent_path = Path(str(base) + ".latents.csv")
    latent_rows = [
        [_fmt(latents["aggressiveness"][i]), _fmt(latents["inattention"][i]), _fmt(latents["noise"][i])]
        for i in range(ds.n)
    ]
    write_atomic(latent_path, _csv_text(["aggressiveness", "inattention", "noise"], latent_rows))

    schema_path = Path(str(base) + ".schema.json")
    write_atomic(schema_path, json.dumps(synthetic.SCHEMA.to_dict(), indent=2, sort_keys=True) + "\n")

    _write_manifest(
        base,
        "synth",
        {"n": args.n, "noise_variance": args.noise_variance},
        args.seed,
        {
            "rows": ds.n,
            "cols": ds.p + 2,
            "sha256": hashlib.sha256(csv_text.encode("utf-8")).hexdigest(),
        },
        [args.out, latent_path, schema_path],
        t0,
    )
    return 0


def cmd_train(args) -> int:
    t0 = time.monotonic()
    schema = ColumnSchema.from_json_file(args.schema)
    ds = load_csv(args.data, schema)
    config = _read_config(args.config, args.seed)
    model, trace = train(ds, config)
    model.schema = schema.to_dict()
    save_model(model, args.out_model)
    write_atomic(args.out_trace, trace.to_csv_text())
    _write_manifest(
        _base(args.out_model),
        "train",
        config.to_dict(),
        config.seed,
        {"rows": ds.n, "cols": ds.p, "sha256": _sha256_file(args.data)},
        [args.out_model, args.out_trace],
        t0,
    )
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.monotonic()
    model = load_model(args.model)
    ds = _load_dataset_for_model(model, args.data)
    preds = classify(model, ds.features)
    report = fairness_report(preds, ds.labels, ds.sensitive)
    write_atomic(args.out_report, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    edges, mass0, mass1 = group_score_histograms(model, ds, args.bins)
    hist_path = Path(str(_base(args.out_report)) + ".hist.csv")
    hist_rows = [
        [_fmt(edges[i]), _fmt(edges[i + 1]), _fmt(mass0[i]), _fmt(mass1[i])]
        for i in range(len(mass0))
    ]
    write_atomic(hist_path, _csv_text(["bin_left", "bin_right", "mass_s0", "mass_s1"], hist_rows))

    _write_manifest(
        _base(args.out_report),
        "evaluate",
        {"bins": args.bins, "model": str(args.model)},
        model.config.seed,
        {"rows": ds.n, "cols": ds.p, "sha256": _sha256_file(args.data)},
        [args.out_report, hist_path],
        t0,
    )
    return 0


def _parse_lambdas(text: str) -> list[float]:
    vals = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            v = float(part)
        except ValueError as exc:
            raise ConfigError(f"invalid lambda value '{part}'") from exc
        if v < 0:
            raise ConfigError(f"lambda values must be >= 0, got {v}")
        vals.append(v)
    if not vals:
        raise ConfigError("need at least one lambda value")
    return sorted(vals)


def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    schema = ColumnSchema.from_json_file(args.schema) if args.schema else synthetic.SCHEMA
    ds = load_csv(args.data, schema)
    config = _read_config(args.config, args.seed)
    lambdas = _parse_lambdas(args.lambdas)
    if args.repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if not 0.0 < args.test_fraction < 1.0:
        raise ConfigError("test-fraction must be in (0, 1)")

    master = config.seed
    accs = {lam: [] for lam in lambdas}
    prules = {lam: [] for lam in lambdas}
    for i in range(args.repeats):
        tr, te = train_test_split(ds, args.test_fraction, substream_seed(master, 11, i))
        for lam in lambdas:
            cfg = replace(config, lam=lam, seed=substream_seed(master, 7, i))
            model, _ = train(tr, cfg)
            rep = fairness_report(classify(model, te.features), te.labels, te.sensitive)
            accs[lam].append(rep.accuracy)
            prules[lam].append(rep.p_rule)

    rows = [
        [
            _fmt(lam),
            _fmt(np.mean(accs[lam])),
            _fmt(np.std(accs[lam])),
            _fmt(np.mean(prules[lam])),
            _fmt(np.std(prules[lam])),
        ]
        for lam in lambdas
    ]
    write_atomic(
        args.out,
        _csv_text(["lambda", "acc_mean", "acc_std", "prule_mean", "prule_std"], rows),
    )
    snapshot = config.to_dict()
    snapshot.update({"lambdas": lambdas, "repeats": args.repeats, "test_fraction": args.test_fraction})
    _write_manifest(
        _base(args.out),
        "sweep",
        snapshot,
        master,
        {"rows": ds.n, "cols": ds.p, "sha256": _sha256_file(args.data)},
        [args.out],
        t0,
    )
    return 0


def cmd_importance(args) -> int:
    t0 = time.monotonic()
    model = load_model(args.model)
    ds = _load_dataset_for_model(model, args.data)
    rows = []
    for j, name in enumerate(ds.feature_names):
        imp = permutation_importance(
            model, ds, j, n_repeats=args.repeats, seed=substream_seed(args.seed, 3, j)
        )
        rows.append([name, _fmt(imp)])
    write_atomic(args.out, _csv_text(["feature", "importance"], rows))
    _write_manifest(
        _base(args.out),
        "importance",
        {"repeats": args.repeats, "model": str(args.model)},
        args.seed,
        {"rows": ds.n, "cols": ds.p, "sha256": _sha256_file(args.data)},
        [args.out],
        t0,
    )
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairboost",
        description="Fair adversarial gradient tree boosting for binary classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic car-insurance dataset")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset CSV path")
    p.add_argument("--noise-variance", type=float, default=0.1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model from a CSV + schema + config")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True, help="column schema JSON")
    p.add_argument("--config", required=True, help="train config JSON")
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-trace", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="fairness report + score histograms for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--bins", type=int, default=10, help="histogram bins over [0, 1]")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="accuracy/fairness trade-off across lambda values")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None, help="column schema JSON (default: synth layout)")
    p.add_argument("--config", required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated lambda values")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("importance", help="permutation feature importance of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_importance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, TrainingError, MetricError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
