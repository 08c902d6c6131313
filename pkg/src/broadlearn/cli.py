"""Command-line surface: train, grow, predict, search, sweep, scale.

Every run emits exactly one manifest (written next to the primary output, or
printed when the command produces no files). Output files are written to a
temporary name and renamed on success, so failures never leave partial files.
Metrics, growth logs, predictions, and trial logs are line-delimited JSON
records with a stable field order.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Set BROADLEARN_LOG=debug|info|warning for stderr verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import bls_core, data_metrics, frontend, hypersearch, kernels, linalg, model_io, synth
from .errors import BroadlearnError, StateError, UsageError

log = logging.getLogger("broadlearn")

_ER_UNITS_DEFAULT = 64


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_bytes(path: Path, blob: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _git_describe() -> str | None:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


class _Run:
    """Collects outputs and timing, then emits the manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.config = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items()
            if k != "func"
        }
        self.outputs: list[str] = []
        self.started = time.time()
        self.t0 = time.perf_counter()

    def add_output(self, path: Path) -> None:
        self.outputs.append(str(path))

    def manifest(self) -> dict:
        finished = time.time()
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.config.get("seed"),
            "started": self.started,
            "finished": finished,
            "seconds": time.perf_counter() - self.t0,
            "outputs": self.outputs,
            "git": _git_describe(),
        }

    def emit_manifest(self) -> None:
        manifest = self.manifest()
        if self.outputs:
            path = Path(self.outputs[0] + ".manifest.json")
            _atomic_write_text(path, json.dumps(manifest, indent=2) + "\n")
        else:
            print(json.dumps({"record": "manifest", **manifest}))


def _records_text(records: list[dict]) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)


def _emit_records(run: _Run, records: list[dict], path: Path | None) -> None:
    for r in records:
        print(json.dumps(r))
    if path is not None:
        _atomic_write_text(path, _records_text(records))
        run.add_output(path)


def _load(args, path: Path) -> data_metrics.LabeledFeatures:
    fmt = args.format
    if fmt is None:
        fmt = "fmx" if str(path).endswith(".fmx") else "csv"
    return data_metrics.load_features(path, fmt)


def _require_labels(data: data_metrics.LabeledFeatures, what: str):
    if data.labels is None:
        raise ValueError(f"{what} requires labeled features (no label column/block found)")


def _split_seed(args) -> int:
    return args.seed if args.split_seed is None else args.split_seed


def _train_test(args) -> tuple[data_metrics.LabeledFeatures, data_metrics.LabeledFeatures]:
    if args.fixture:
        return synth.blobs(seed=args.seed)
    data = _load(args, args.features)
    _require_labels(data, "training")
    if getattr(args, "test_features", None) is not None:
        test = _load(args, args.test_features)
        _require_labels(test, "evaluation")
        return data, test
    split = data_metrics.split_8_2(data.samples, _split_seed(args))
    return data.subset(split.train), data.subset(split.test)


def _hyper(args) -> bls_core.HyperParams:
    return bls_core.HyperParams(
        n1=args.n1,
        n2=args.n2,
        n3=args.n3,
        lam=args.lam,
        shrink=args.shrink,
        seed=args.seed,
    )


def _safe_pearson(pred, truth) -> float | None:
    try:
        return data_metrics.pearson(pred, truth)
    except ValueError:
        return None


def _metrics_record(split: str, pred, truth, seconds: float) -> dict:
    return {
        "record": "metrics",
        "split": split,
        "ac": data_metrics.accuracy(pred, truth),
        "pc": _safe_pearson(pred, truth),
        "seconds": seconds,
    }


def cmd_train(args) -> int:
    run = _Run("train", args)
    train, test = _train_test(args)
    connection = None
    x_train, x_test = train.x, test.x
    if args.er:
        layer = frontend.ConnectionLayer.random(
            train.dims, args.er_units, args.seed, rbf_kind=args.rbf
        )
        connection = frontend.connection_fit(x_train, layer)
        x_train = frontend.connection_forward(train.x, connection)
        x_test = frontend.connection_forward(test.x, connection)
    hyper = _hyper(args)
    y_train = train.one_hot_labels()

    grow_capable = args.grow_capable or args.target_ac is not None
    t0 = time.perf_counter()
    records: list[dict] = []
    if args.target_ac is not None:
        model, growth = bls_core.train_until(
            x_train,
            y_train,
            hyper,
            target_accuracy=args.target_ac,
            step=(args.add_feat, args.add_enh),
            max_steps=args.max_steps,
        )
        for rec in growth:
            records.append(
                {
                    "record": "growth",
                    "step": rec.step,
                    "feature_nodes": rec.feature_nodes,
                    "enhancement_nodes": rec.enhancement_nodes,
                    "columns": rec.columns,
                    "train_ac": rec.train_accuracy,
                    "seconds": rec.seconds,
                    "note": rec.note,
                }
            )
    else:
        model = bls_core.train(x_train, y_train, hyper, grow_capable=grow_capable)
    train_seconds = time.perf_counter() - t0

    pred_train = bls_core.predict_labels(model, x_train)
    records.append(_metrics_record("train", pred_train, train.labels, train_seconds))
    pred_test = bls_core.predict_labels(model, x_test)
    records.append(_metrics_record("test", pred_test, test.labels, 0.0))

    if args.model_out is not None:
        _atomic_write_bytes(args.model_out, model_io.model_to_bytes(model, connection))
        run.add_output(args.model_out)
    _emit_records(run, records, args.report)
    run.emit_manifest()
    return 0


def cmd_grow(args) -> int:
    run = _Run("grow", args)
    model, connection = model_io.load_model(args.model_in)
    if not model.grow_capable:
        raise StateError("model was not saved grow-capable; retrain with --grow-capable")
    if args.fixture:
        train, _ = synth.blobs(seed=args.seed)
    else:
        train = _load(args, args.features)
        _require_labels(train, "growing")
    x = train.x if connection is None else frontend.connection_forward(train.x, connection)
    y = data_metrics.one_hot(train.labels, model.classes)

    t0 = time.perf_counter()
    grown = bls_core.grow(model, args.add_feat, args.add_enh, x, y)
    seconds = time.perf_counter() - t0

    pred = bls_core.predict_labels(grown, x)
    record = {
        "record": "growth",
        "step": len(grown.enhancements.groups) - 1,
        "feature_nodes": grown.feature_nodes,
        "enhancement_nodes": grown.enhancement_nodes,
        "columns": grown.columns,
        "train_ac": data_metrics.accuracy(pred, train.labels),
        "seconds": seconds,
        "note": "",
    }
    records = [record]
    if args.verify:
        w_batch = linalg.pinv(bls_core.design_matrix(grown, x)) @ y
        dev = float(np.max(np.abs(grown.w_out - w_batch)))
        scale = max(1.0, float(np.max(np.abs(w_batch))))
        records.append(
            {
                "record": "verify",
                "max_weight_deviation": dev / scale,
                "relative_frobenius": float(
                    np.linalg.norm(grown.w_out - w_batch) / max(1e-300, np.linalg.norm(w_batch))
                ),
            }
        )

    model_out = args.model_out if args.model_out is not None else args.model_in
    _atomic_write_bytes(model_out, model_io.model_to_bytes(grown, connection))
    run.add_output(model_out)
    growth_log = Path(str(model_out) + ".growth.jsonl")
    existing = growth_log.read_text() if growth_log.exists() else ""
    _atomic_write_text(growth_log, existing + _records_text([record]))
    run.add_output(growth_log)
    _emit_records(run, records, args.report)
    run.emit_manifest()
    return 0


def cmd_predict(args) -> int:
    run = _Run("predict", args)
    model, connection = model_io.load_model(args.model_in)
    data = _load(args, args.features)
    if args.labels_in_file:
        _require_labels(data, "--labels-in-file scoring")
    x = data.x if connection is None else frontend.connection_forward(data.x, connection)
    scores = bls_core.predict_scores(model, x)
    labels = np.argmax(scores, axis=1)
    records = []
    for i in range(scores.shape[0]):
        rec = {"record": "prediction", "index": i}
        if data.ids is not None:
            rec["id"] = data.ids[i]
        rec["label"] = int(labels[i])
        rec["scores"] = [float(v) for v in scores[i]]
        records.append(rec)
    if args.labels_in_file:
        records.append(_metrics_record("predict", labels, data.labels, 0.0))
    _emit_records(run, records, args.report)
    run.emit_manifest()
    return 0


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi if hi else lo)
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected LO:HI") from None


def cmd_search(args) -> int:
    run = _Run("search", args)
    if args.fixture:
        data, _ = synth.blobs(seed=args.seed)
    else:
        data = _load(args, args.features)
        _require_labels(data, "search")
        # validation is carved from the 8:2 training side, keeping the test
        # split untouched for final evaluation
        data = data.subset(data_metrics.split_8_2(data.samples, _split_seed(args)).train)
    space = hypersearch.SearchSpace(
        n1_range=_parse_range(args.n1_range),
        n2_range=_parse_range(args.n2_range),
        n3_range=_parse_range(args.n3_range),
        lambda_choices=tuple(float(v) for v in args.lambda_choices.split(",")),
    )
    if args.halving:
        best, trials = hypersearch.halving_search(
            space, data, args.budget, eta=args.eta, seed=args.seed,
            val_fraction=args.val_fraction,
        )
    else:
        best, trials = hypersearch.random_search(
            space, data, args.budget, val_fraction=args.val_fraction, seed=args.seed
        )
    records = [hypersearch.trial_record(t) for t in trials]
    records.append({"record": "best", **hypersearch.trial_record(best)})
    _emit_records(run, records, args.report)
    run.emit_manifest()
    return 0


def cmd_sweep(args) -> int:
    run = _Run("sweep", args)
    train, test = _train_test(args)
    y_train = train.one_hot_labels()
    records = []
    for n3 in (int(v) for v in args.n3_list.split(",")):
        hyper = bls_core.HyperParams(
            n1=args.n1, n2=args.n2, n3=n3, lam=args.lam, shrink=args.shrink, seed=args.seed
        )
        t0 = time.perf_counter()
        model = bls_core.train(train.x, y_train, hyper)
        seconds = time.perf_counter() - t0
        pred = bls_core.predict_labels(model, test.x)
        records.append(
            {
                "record": "sweep",
                "feature_nodes": f"{args.n1} x {args.n2}",
                "enhancement_nodes": n3,
                "seconds": seconds,
                "test_ac": data_metrics.accuracy(pred, test.labels),
            }
        )
    _emit_records(run, records, args.report)
    run.emit_manifest()
    return 0


def cmd_scale(args) -> int:
    run = _Run("scale", args)
    res = frontend.compound_scaling(
        frontend.ScalingConfig(alpha=args.alpha, beta=args.beta, gamma=args.gamma, lam=args.lam)
    )
    print(
        json.dumps(
            {
                "record": "scale",
                "depth": res.depth,
                "width": res.width,
                "resolution": res.resolution,
                "flops_multiplier": res.flops_multiplier,
                "constraint_residual": res.constraint_residual,
            }
        )
    )
    run.emit_manifest()
    return 0


def _add_data_flags(p: argparse.ArgumentParser, with_fixture: bool = True):
    p.add_argument("--features", type=Path, help="feature file (csv or fmx)")
    if with_fixture:
        p.add_argument(
            "--fixture", action="store_true",
            help="use the built-in synthetic blobs dataset instead of --features",
        )
    p.add_argument("--format", choices=data_metrics.FORMATS, default=None,
                   help="feature file format (default: by extension)")
    p.add_argument("--labels-in-file", action="store_true",
                   help="require labels in the feature file and score against them")


def _add_hyper_flags(p: argparse.ArgumentParser):
    p.add_argument("--n1", type=int, default=10, help="feature windows")
    p.add_argument("--n2", type=int, default=10, help="nodes per feature window")
    p.add_argument("--n3", type=int, default=200, help="enhancement nodes")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-8, help="ridge coefficient")
    p.add_argument("--shrink", type=float, default=0.8,
                   help="scale on enhancement pre-activations")


def _add_seed_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=None,
                   help="seed for the 8:2 split (default: --seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="broadlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and report train/test metrics")
    _add_data_flags(p)
    _add_hyper_flags(p)
    _add_seed_flags(p)
    p.add_argument("--test-features", type=Path, default=None,
                   help="separate test file instead of the 8:2 split")
    p.add_argument("--er", action="store_true",
                   help="route features through the pooled-normalized radial connection layer")
    p.add_argument("--er-units", type=int, default=_ER_UNITS_DEFAULT)
    p.add_argument("--rbf", choices=tuple(kernels.RBF_CODES), default="gaussian")
    p.add_argument("--grow-capable", action="store_true",
                   help="cache the pseudoinverse so the model can grow later")
    p.add_argument("--target-ac", type=float, default=None,
                   help="grow until this training accuracy is reached")
    p.add_argument("--add-feat", type=int, default=20,
                   help="feature nodes per growth step (with --target-ac)")
    p.add_argument("--add-enh", type=int, default=500,
                   help="enhancement nodes per growth step (with --target-ac)")
    p.add_argument("--max-steps", type=int, default=10)
    p.add_argument("--model-out", type=Path, default=None)
    p.add_argument("--report", type=Path, default=None, help="metrics file (JSON lines)")
    p.set_defaults(func=cmd_train, needs_data=True)

    p = sub.add_parser("grow", help="append nodes to a grow-capable model")
    _add_data_flags(p)
    _add_seed_flags(p)
    p.add_argument("--model-in", type=Path, required=True)
    p.add_argument("--model-out", type=Path, default=None,
                   help="where to write the grown model (default: --model-in)")
    p.add_argument("--add-feat", type=int, default=20)
    p.add_argument("--add-enh", type=int, default=500)
    p.add_argument("--verify", action="store_true",
                   help="re-solve the augmented system directly and report the deviation")
    p.add_argument("--report", type=Path, default=None)
    p.set_defaults(func=cmd_grow, needs_data=True)

    p = sub.add_parser("predict", help="emit per-sample scores and labels")
    _add_data_flags(p, with_fixture=False)
    p.add_argument("--model-in", type=Path, required=True)
    p.add_argument("--report", type=Path, default=None)
    p.set_defaults(func=cmd_predict, needs_data=True, fixture=False)

    p = sub.add_parser("search", help="hyperparameter search over node counts")
    _add_data_flags(p)
    _add_seed_flags(p)
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--n1-range", default="1:20")
    p.add_argument("--n2-range", default="2:40")
    p.add_argument("--n3-range", default="10:1000")
    p.add_argument("--lambda-choices", default="1e-8")
    p.add_argument("--halving", action="store_true", help="successive halving instead of flat random search")
    p.add_argument("--eta", type=float, default=3.0)
    p.add_argument("--report", type=Path, default=None, help="trial log (JSON lines)")
    p.set_defaults(func=cmd_search, needs_data=True)

    p = sub.add_parser("sweep", help="sweep enhancement nodes at fixed feature nodes")
    _add_data_flags(p)
    _add_seed_flags(p)
    p.add_argument("--n1", type=int, default=12)
    p.add_argument("--n2", type=int, default=54)
    p.add_argument("--n3-list", default="1000,2000,3000,4000,5000,6000,7000,8000")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-8)
    p.add_argument("--shrink", type=float, default=0.8)
    p.add_argument("--report", type=Path, default=None)
    p.set_defaults(func=cmd_sweep, needs_data=True)

    p = sub.add_parser("scale", help="evaluate the compound depth/width/resolution rule")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.0, help="scaling exponent")
    p.set_defaults(func=cmd_scale, needs_data=False)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("BROADLEARN_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "needs_data", False) and args.command != "predict":
            if not args.fixture and args.features is None:
                parser.error(f"{args.command} requires --features or --fixture")
        if args.command == "predict" and args.features is None:
            parser.error("predict requires --features")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"broadlearn: error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"broadlearn: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (BroadlearnError, ValueError, OSError) as exc:
        print(f"broadlearn: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
