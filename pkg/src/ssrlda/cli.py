"""Batch command-line interface.

Subcommands: ``solve`` (one pipeline run), ``sweep`` (one-axis parameter
sweep), ``bench`` (manifest of tasks), ``pad`` (proxy A-distance between
two files), ``ablate`` (feature-block variants). Reports are written under
``--out`` as CSV (or JSON with ``--format json``) with matplotlib figures
alongside. Exit codes: 0 success, 1 fatal error, 2 partial completion.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import evalcli, figures
from .classify import accuracy, save_model
from .dataio import load_sparse, make_domain_pair
from .errors import ValidationError
from .pipeline import AdaptConfig, run_variant, write_trace_csv


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(float(obj)) else float(obj)
    return obj


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")


def _build_config(args) -> AdaptConfig:
    config = AdaptConfig.from_file(args.config) if args.config else AdaptConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "class_count", None) is not None:
        overrides["class_count"] = args.class_count
    return config.updated(overrides) if overrides else config


def _load_matrix(path: str, fmt: str, labeled: bool = True):
    if fmt == "auto":
        fmt = "csv" if path.lower().endswith(".csv") else "svmlight"
    return load_sparse(path, fmt=fmt, labeled=labeled)


def _load_args_pair(args, config: AdaptConfig):
    source = _load_matrix(args.source, args.input_format)
    target = _load_matrix(args.target, args.input_format, labeled=not args.target_unlabeled)
    if source.labels is None:
        raise ValidationError(f"{args.source}: source file must carry labels")
    class_count = config.class_count
    if class_count is None:
        class_count = int(source.labels.max()) + 1
    return make_domain_pair(source, target, class_count)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_solve(args) -> int:
    config = _build_config(args)
    pair = _load_args_pair(args, config)
    result = run_variant(pair, config, args.variant)
    out = _out_dir(args)

    acc = (
        accuracy(result.target_predictions, pair.target_truth)
        if pair.target_truth is not None
        else math.nan
    )
    summary = {
        "variant": args.variant,
        "target_accuracy": acc,
        "config": config.snapshot(),
        "trace": [asdict(t) for t in result.trace],
    }
    _write_json(out / "run.json", summary)
    save_model(result.model, out / "model.txt")
    if args.format == "json":
        _write_json(out / "trace.json", [asdict(t) for t in result.trace])
        _write_json(out / "predictions.json", result.target_predictions)
    else:
        write_trace_csv(result.trace, out / "trace.csv")
        with open(out / "predictions.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance", "predicted_class"])
            for i, label in enumerate(result.target_predictions):
                writer.writerow([i, int(label)])
    if not args.no_figures:
        figures.save_trace_figure(result.trace, out / "trace.png")
    if not math.isnan(acc):
        print(f"target accuracy: {acc:.4f}")
    print(f"wrote {out}")
    return 0


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    pair = _load_args_pair(args, config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    grid = evalcli.SweepGrid(args.axis, values)
    cells = evalcli.run_sweep(pair, config, grid, jobs=args.jobs)
    out = _out_dir(args)
    if args.format == "json":
        _write_json(out / "sweep.json", [asdict(c) for c in cells])
    else:
        evalcli.write_sweep_csv(cells, out / "sweep.csv")
    if not args.no_figures:
        figures.save_sweep_figure(cells, out / "sweep.png")
    for cell in cells:
        note = f"  ({cell.error})" if cell.error else ""
        print(f"{cell.axis}={cell.value:g}: accuracy={cell.accuracy:.4f}{note}")
    return 2 if any(c.error for c in cells) else 0


def _cmd_bench(args) -> int:
    config = _build_config(args)
    reports = evalcli.run_benchmark(args.manifest, config, jobs=args.jobs, folds=args.folds)
    out = _out_dir(args)
    if args.format == "json":
        _write_json(out / "bench.json", [asdict(r) for r in reports])
    else:
        evalcli.write_reports_csv(reports, out / "bench.csv")
    evalcli.write_summary_text(reports, out / "bench_summary.txt")
    if not args.no_figures:
        figures.save_bench_figure(reports, out / "bench.png")
    print((out / "bench_summary.txt").read_text(encoding="utf-8"), end="")
    return 2 if any(r.status == "error" for r in reports) else 0


def _cmd_pad(args) -> int:
    labeled = not args.no_labels
    a = _load_matrix(args.source, args.input_format, labeled)
    b = _load_matrix(args.target, args.input_format, labeled)
    distance = evalcli.proxy_a_distance(
        a.values, b.values, folds=args.folds, seed=args.seed or 0
    )
    out = _out_dir(args)
    payload = {"source": args.source, "target": args.target,
               "folds": args.folds, "proxy_a_distance": distance}
    if args.format == "json":
        _write_json(out / "pad.json", payload)
    else:
        with open(out / "pad.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source", "target", "folds", "proxy_a_distance"])
            writer.writerow([args.source, args.target, args.folds, repr(distance)])
    print(f"proxy A-distance: {distance:.4f}")
    return 0


def _cmd_ablate(args) -> int:
    config = _build_config(args)
    pair = _load_args_pair(args, config)
    accuracies = evalcli.run_ablation(pair, config)
    out = _out_dir(args)
    if args.format == "json":
        _write_json(out / "ablate.json", accuracies)
    else:
        with open(out / "ablate.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "accuracy"])
            for name, acc in accuracies.items():
                writer.writerow([name, repr(acc)])
    if not args.no_figures:
        figures.save_ablation_figure(accuracies, out / "ablate.png")
    for name, acc in accuracies.items():
        print(f"{name}: accuracy={acc:.4f}")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value or JSON config file")
    sub.add_argument("--seed", type=int, default=None, help="override the config rng seed")
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _add_pair_inputs(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--source", required=True, help="labeled source file")
    sub.add_argument("--target", required=True,
                     help="target file (labels, when present, are held out for scoring)")
    sub.add_argument("--input-format", choices=("auto", "svmlight", "csv"), default="auto")
    sub.add_argument("--class-count", type=int, default=None)
    sub.add_argument("--target-unlabeled", action="store_true",
                     help="parse the target file without a label token")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssrlda",
        description="Dual-autoencoder domain adaptation: solvers, sweeps, benchmarks.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="run the pipeline on one source/target pair")
    _add_pair_inputs(solve)
    solve.add_argument("--variant", choices=("full", "omda_ad", "ommda"), default="full")
    _add_common(solve)
    solve.set_defaults(func=_cmd_solve)

    sweep = subs.add_parser("sweep", help="vary one hyper-parameter, fixing the others")
    _add_pair_inputs(sweep)
    sweep.add_argument("--axis", choices=evalcli.SWEEP_AXES, required=True)
    sweep.add_argument("--values", required=True, help="comma-separated values")
    _add_common(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    bench = subs.add_parser("bench", help="run a manifest of benchmark tasks")
    bench.add_argument("--manifest", required=True,
                       help="CSV: name, source_path, target_path[, overrides]")
    bench.add_argument("--folds", type=int, default=5)
    _add_common(bench)
    bench.set_defaults(func=_cmd_bench)

    pad = subs.add_parser("pad", help="proxy A-distance between two feature files")
    pad.add_argument("--source", required=True)
    pad.add_argument("--target", required=True)
    pad.add_argument("--input-format", choices=("auto", "svmlight", "csv"), default="auto")
    pad.add_argument("--no-labels", action="store_true")
    pad.add_argument("--folds", type=int, default=5)
    _add_common(pad)
    pad.set_defaults(func=_cmd_pad)

    ablate = subs.add_parser("ablate", help="compare full, global-only, local-only variants")
    _add_pair_inputs(ablate)
    _add_common(ablate)
    ablate.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {evalcli.format_exception(exc)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
