"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data/validation error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    PROFILES,
    ConditionSchema,
    NumericalTemplate,
    OrderedTemplate,
    SynthConfig,
    UnorderedTemplate,
    fit_length,
    parse_csv,
    read_records,
    split_train_test,
    synthesize,
    validate,
    write_csv,
)
from .errors import DataError, NumericalError
from .features import FeaturePipeline, fit_pipeline
from .metrics import format_table, report
from .network import ClassifierConfig
from .training import GridSpec, TrainConfig, TrainedModel, grid_search, train, train_baseline

logger = logging.getLogger("asset_health")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

PROFILE_HIDDEN = {"pole-like": (10, 10), "cable-like": (8, 8)}


class UsageError(Exception):
    pass


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _manifest(out: Path, command: str, args, inputs: dict, artifacts: list, extra=None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "verbose")}
    doc = {
        "command": command,
        "config": json.loads(json.dumps(config, default=str)),
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in sorted(inputs.items())},
        "seed": getattr(args, "seed", None),
        "artifacts": {name: _sha256(out / name) for name in artifacts},
        "tool_version": __version__,
    }
    if extra:
        doc.update(extra)
    _write(out / "manifest.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _custom_config(path) -> SynthConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    templates = []
    for t in raw.pop("templates"):
        kind = t.pop("kind")
        if kind == "numerical":
            templates.append(NumericalTemplate(**t))
        elif kind == "ordered":
            templates.append(OrderedTemplate(t["name"], tuple(t["levels"])))
        elif kind == "unordered":
            templates.append(
                UnorderedTemplate(
                    t["name"],
                    tuple(t["categories"]),
                    tuple(t["rate_multipliers"]),
                    tuple(t["probabilities"]) if t.get("probabilities") else None,
                )
            )
        else:
            raise DataError(f"unknown template kind {kind!r}")
    for key in ("class_mix", "initial_degradation", "rate_range", "initial_age"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return SynthConfig(templates=tuple(templates), **raw)


def cmd_synth(args) -> int:
    overrides = {"n_assets": args.assets, "timesteps": args.timesteps}
    if args.rate_weight is not None:
        overrides["rate_weight"] = args.rate_weight
    if args.noise is not None:
        overrides["noise"] = args.noise
    if args.class_mix is not None:
        overrides["class_mix"] = args.class_mix
    if args.profile == "custom":
        if not args.config:
            raise UsageError("--profile custom requires --config FILE")
        cfg = replace(_custom_config(args.config), **overrides)
    else:
        cfg = PROFILES[args.profile](**overrides)
    ds = synthesize(cfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / "records.csv", out / "labels.csv")
    ds.schema.save(out / "schema.json")
    inputs = {"config": args.config} if args.config else {}
    _manifest(out, "synth", args, inputs, ["records.csv", "labels.csv", "schema.json"])
    print(f"wrote {len(ds)} assets x {ds.T} inspections to {out}")
    return 0


# ---------------------------------------------------------------------------
# shared loading / training helpers
# ---------------------------------------------------------------------------


def _load_dataset(args):
    schema = ConditionSchema.load(args.schema)
    ds = parse_csv(args.records, schema, args.labels, pad_forward=getattr(args, "pad_forward", False))
    problems = validate(ds)
    if problems:
        shown = "; ".join(f"{v.asset_id}: {v.reason}" for v in problems[:5])
        raise DataError(f"{len(problems)} validation problem(s): {shown}")
    return ds


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        optimizer=args.optimizer,
        validation_fraction=args.validation_fraction,
        early_stop_patience=args.patience,
        clip_norm=args.clip_norm if args.clip_norm > 0 else None,
        seed=args.seed,
    )


def _hidden(args) -> tuple[int, ...]:
    if args.hidden is not None:
        return args.hidden
    return PROFILE_HIDDEN.get(args.profile, (10, 10))


def _parse_grid(text: str, depth: int) -> dict:
    """``lr=0.01,0.001;hidden=8,10;epochs=100;batch=32``. Each hidden
    candidate sets every stacked layer to that width."""
    fields = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        if "=" not in part:
            raise UsageError(f"bad grid term {part!r}")
        key, vals = part.split("=", 1)
        key = key.strip()
        try:
            if key in ("lr", "learning_rate"):
                fields["learning_rate"] = _float_list(vals)
            elif key == "hidden":
                fields["lstm_hidden"] = tuple((w,) * depth for w in _int_list(vals))
            elif key == "epochs":
                fields["epochs"] = _int_list(vals)
            elif key in ("batch", "batch_size"):
                fields["batch_size"] = _int_list(vals)
            else:
                raise UsageError(f"unknown grid key {key!r}")
        except argparse.ArgumentTypeError as e:
            raise UsageError(str(e))
    return fields


def _split(args, ds):
    split_seed = args.split_seed if args.split_seed is not None else args.seed
    return split_train_test(ds, args.test_fraction, split_seed)


# ---------------------------------------------------------------------------
# featurize / train / evaluate / predict / compare
# ---------------------------------------------------------------------------


def cmd_featurize(args) -> int:
    ds = _load_dataset(args)
    train_ds, _ = _split(args, ds)
    pipe = fit_pipeline(train_ds, args.pca_threshold)
    tensor = pipe.transform(train_ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "pipeline.json", pipe.to_json())
    _write(
        out / "features.json",
        json.dumps({"asset_ids": list(tensor.asset_ids), "values": tensor.values.tolist()}) + "\n",
    )
    inputs = {"records": args.records, "labels": args.labels, "schema": args.schema}
    _manifest(out, "featurize", args, inputs, ["pipeline.json", "features.json"])
    print(f"raw width {pipe.raw_width} -> feature width {pipe.out_width}")
    return 0


def cmd_train(args) -> int:
    ds = _load_dataset(args)
    train_ds, test_ds = _split(args, ds)
    pipe = fit_pipeline(train_ds, args.pca_threshold)
    tensor = pipe.transform(train_ds)
    cfg = _train_config(args)
    hidden = _hidden(args)
    mcfg = ClassifierConfig(pipe.out_width, ds.T, hidden, args.dense_relu, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    extra = {"feature_width": pipe.out_width, "timesteps": ds.T}
    if pipe.pca is not None:
        extra["pca"] = {"kept_components": pipe.pca.kept, "pve_achieved": pipe.pca.pve_achieved}
    if args.grid:
        grid = GridSpec(**{"learning_rate": (cfg.learning_rate,), "lstm_hidden": (hidden,),
                           "epochs": (cfg.epochs,), "batch_size": (cfg.batch_size,),
                           **_parse_grid(args.grid, len(hidden))})
        cfg, mcfg, board = grid_search(grid, tensor, train_ds.labels, mcfg, cfg)
        _write(out / "leaderboard.json", json.dumps(board, indent=1, sort_keys=True) + "\n")
        artifacts.append("leaderboard.json")
    tm = train(mcfg, tensor, train_ds.labels, cfg, pipe)
    doc = tm.to_dict()
    doc["manifest"] = "manifest.json"
    _write(out / "model.json", json.dumps(doc, sort_keys=True) + "\n")
    _write(out / "pipeline.json", pipe.to_json())
    _write(out / "history.json", tm.history_json())
    write_csv(test_ds, out / "test_records.csv", out / "test_labels.csv")
    artifacts += ["model.json", "pipeline.json", "history.json", "test_records.csv", "test_labels.csv"]
    inputs = {"records": args.records, "labels": args.labels, "schema": args.schema}
    _manifest(out, "train", args, inputs, artifacts, extra)
    print(f"trained {len(train_ds)} assets; best epoch {tm.chosen_epoch}, validation MP {tm.val_mp:.3f}")
    return 0


def _load_model(args):
    pipe = FeaturePipeline.from_json(Path(args.pipeline).read_text(encoding="utf-8"))
    doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    if doc.get("pipeline_sha256") != pipe.digest():
        raise DataError(
            f"pipeline {args.pipeline} does not match the pipeline model {args.model} was trained with"
        )
    return TrainedModel.from_dict(doc, pipe), pipe


def cmd_evaluate(args) -> int:
    tm, pipe = _load_model(args)
    T = tm.model.config.timesteps if tm.model.kind == "lstm" else None
    ds = parse_csv(args.records, pipe.schema, args.labels, T=T)
    rep = report(tm.model, pipe, ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "report.json", rep.to_json())
    _write(out / "report.txt", format_table([(tm.model.kind.upper(), rep)]))
    inputs = {"model": args.model, "pipeline": args.pipeline, "records": args.records, "labels": args.labels}
    _manifest(out, "evaluate", args, inputs, ["report.json", "report.txt"])
    sys.stdout.write(format_table([(tm.model.kind.upper(), rep)]))
    return 0


def cmd_predict(args) -> int:
    tm, pipe = _load_model(args)
    histories = read_records(args.records, pipe.schema)
    T = tm.model.config.timesteps if tm.model.kind == "lstm" else 1
    fitted = []
    for h in histories:
        f = fit_length(h, T)
        if f is None:
            raise DataError(f"asset {h.asset_id} has {len(h)} inspection(s); the model needs {T}")
        fitted.append(f)
    X = pipe.transform(fitted).values
    if tm.model.kind == "fnn":
        X = X[:, -1, :]
    probs = np.atleast_2d(tm.model.predict_proba(X))
    pred = np.argmax(probs, axis=1) + 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "predictions.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset_id", "predicted_h", "p1", "p2", "p3", "p4", "p5"])
        for h, k, p in zip(fitted, pred, probs):
            w.writerow([h.asset_id, int(k), *(repr(float(v)) for v in p)])
    inputs = {"model": args.model, "pipeline": args.pipeline, "records": args.records}
    _manifest(out, "predict", args, inputs, ["predictions.csv"])
    print(f"wrote {len(fitted)} predictions to {out / 'predictions.csv'}")
    return 0


def run_compare(ds, pca_threshold, hidden, cfg: TrainConfig, test_fraction: float, split_seed: int):
    """Train the sequence model and the snapshot baseline on the same split
    with the same budget; return their test reports."""
    train_ds, test_ds = split_train_test(ds, test_fraction, split_seed)
    pipe = fit_pipeline(train_ds, pca_threshold)
    tensor = pipe.transform(train_ds)
    mcfg = ClassifierConfig(pipe.out_width, ds.T, hidden, seed=cfg.seed)
    lstm = train(mcfg, tensor, train_ds.labels, cfg, pipe)
    fnn = train_baseline(tensor, train_ds.labels, cfg, hidden, pipe)
    return report(lstm.model, pipe, test_ds), report(fnn.model, pipe, test_ds), lstm, fnn, pipe


def cmd_compare(args) -> int:
    ds = _load_dataset(args)
    split_seed = args.split_seed if args.split_seed is not None else args.seed
    rl, rf, lstm, fnn, pipe = run_compare(
        ds, args.pca_threshold, _hidden(args), _train_config(args), args.test_fraction, split_seed
    )
    doc = {
        "lstm": rl.to_dict(),
        "fnn": rf.to_dict(),
        "delta": {"mp": rl.mp - rf.mp, "mr": rl.mr - rf.mr},
        "chosen_epochs": {"lstm": lstm.chosen_epoch, "fnn": fnn.chosen_epoch},
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "compare.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    text = format_table([("LSTM", rl), ("FNN", rf)])
    text += f"\ndelta MP {rl.mp - rf.mp:+.3f}  delta MR {rl.mr - rf.mr:+.3f}\n"
    _write(out / "compare.txt", text)
    inputs = {"records": args.records, "labels": args.labels, "schema": args.schema}
    _manifest(out, "compare", args, inputs, ["compare.json", "compare.txt"])
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_data_args(p):
    p.add_argument("--records", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--pad-forward", action="store_true", help="pad short histories with their earliest record")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=None, help="defaults to --seed")


def _add_train_args(p):
    p.add_argument("--profile", choices=sorted(PROFILE_HIDDEN), default=None,
                   help="take default hidden sizes from a fleet profile")
    p.add_argument("--pca-threshold", type=float, default=None)
    p.add_argument("--hidden", type=_int_list, default=None, help="stacked LSTM widths, e.g. 10,10")
    p.add_argument("--dense-relu", type=int, default=None, help="width of an optional dense ReLU head")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--validation-fraction", type=float, default=0.1)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--clip-norm", type=float, default=5.0, help="0 disables clipping")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asset-health", description="Health-index estimation for asset classes")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic fleet")
    p.add_argument("--out", required=True)
    p.add_argument("--assets", type=int, required=True)
    p.add_argument("--timesteps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--profile", choices=["pole-like", "cable-like", "custom"], required=True)
    p.add_argument("--config", help="JSON generator config (custom profile)")
    p.add_argument("--rate-weight", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--class-mix", type=_float_list, help="five weights for H1..H5")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="fit the feature pipeline on the training split")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_data_args(p)
    p.add_argument("--pca-threshold", type=float, default=None)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit pipeline and train the sequence model")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--grid", help="grid search, e.g. 'lr=0.01,0.001;hidden=8,10'")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on labeled records")
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--pipeline", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict health indices for unlabeled records")
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--pipeline", required=True)
    p.add_argument("--records", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare", help="sequence model vs last-inspection baseline")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_data_args(p)
    _add_train_args(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE if isinstance(e, ValueError) else EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
