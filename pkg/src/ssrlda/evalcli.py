"""Experiment runner: domain-distance metric, parameter sweeps, benchmarks.

Everything here is batch-oriented: functions return plain records that the
CLI serializes as CSV (RFC-4180 quoting via the csv module) or JSON, with
matplotlib figures rendered next to the delimited output.
"""

from __future__ import annotations

import csv
import math
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classify import accuracy, predict, train_linear
from .dataio import DomainPair, LabeledMatrix, load_sparse, make_domain_pair
from .errors import ValidationError
from .pipeline import AdaptConfig, parse_config_text, run_ssrlda, run_variant

SWEEP_AXES = ("l", "p", "beta", "lambda")


def a_distance_from_error(eps: float) -> float:
    """Distance proxy 2*(1-2*eps), clamped to [0, 2].

    Discriminator error above chance (eps > 0.5) maps to 0.
    """
    return float(min(max(2.0 * (1.0 - 2.0 * eps), 0.0), 2.0))


def proxy_a_distance(
    x_s: np.ndarray,
    x_t: np.ndarray,
    folds: int = 5,
    seed: int = 0,
    clf_reg: float = 1.0,
    clf_max_iter: int = 200,
    clf_tol: float = 1e-5,
) -> float:
    """Domain distance from a cross-validated source-vs-target discriminator.

    Source rows are labeled 0 and target rows 1; a linear hinge-loss
    classifier is scored with ``folds``-fold cross validation and the mean
    held-out error feeds :func:`a_distance_from_error`. A fold whose
    training split degenerates to a single domain is scored at chance.
    """
    x_s = np.asarray(x_s, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_s.ndim != 2 or x_t.ndim != 2 or x_s.shape[1] != x_t.shape[1]:
        raise ValidationError(f"incompatible shapes {x_s.shape} and {x_t.shape}")
    if x_s.shape[0] == 0 or x_t.shape[0] == 0:
        raise ValidationError("both domains must be non-empty")
    if folds < 2:
        raise ValidationError("folds must be >= 2")
    n = x_s.shape[0] + x_t.shape[0]
    if n < folds:
        raise ValidationError(f"{n} instances cannot fill {folds} folds")
    x = np.vstack([x_s, x_t])
    y = np.concatenate([np.zeros(x_s.shape[0], np.int64), np.ones(x_t.shape[0], np.int64)])
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[rng.permutation(n)] = np.arange(n) % folds
    errors = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        if np.unique(y[train]).size < 2:
            errors.append(0.5)
            continue
        model = train_linear(
            x[train], y[train], reg=clf_reg, max_iter=clf_max_iter, tol=clf_tol
        )
        errors.append(1.0 - accuracy(predict(model, x[test]), y[test]))
    return a_distance_from_error(float(np.mean(errors)))


@dataclass
class SweepGrid:
    """One swept hyper-parameter axis; every other parameter stays fixed."""

    axis: str
    values: list
    base_config: AdaptConfig | None = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValidationError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise ValidationError("sweep values must be non-empty")


@dataclass
class SweepCell:
    axis: str
    value: float
    accuracy: float
    error: str = ""


def _sweep_cell(args) -> SweepCell:
    pair, config, axis, value = args
    try:
        result = run_ssrlda(pair, config)
        acc = (
            accuracy(result.target_predictions, pair.target_truth)
            if pair.target_truth is not None
            else math.nan
        )
        return SweepCell(axis, float(value), acc)
    except Exception as exc:  # recorded per-cell, sweep continues
        return SweepCell(axis, float(value), math.nan, error=f"{type(exc).__name__}: {exc}")


def run_sweep(
    pair: DomainPair, base_config: AdaptConfig, grid: SweepGrid, jobs: int = 1
) -> list[SweepCell]:
    """One full pipeline run per grid value; failures are recorded per cell."""
    cfg0 = grid.base_config if grid.base_config is not None else base_config
    configs = [cfg0.with_axis(grid.axis, v) for v in grid.values]
    work = [(pair, cfg, grid.axis, v) for cfg, v in zip(configs, grid.values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_cell, work))
    return [_sweep_cell(item) for item in work]


@dataclass
class BenchTask:
    name: str
    source_path: str
    target_path: str
    overrides: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    """Per-task record: accuracies, domain distances, config, timings."""

    task: str
    status: str = "ok"  # ok | skipped | error
    reason: str = ""
    accuracies: dict = field(default_factory=dict)
    pad_before: float = math.nan
    pad_after: float = math.nan
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.accuracies.items():
            if not math.isnan(value) and not 0.0 <= value <= 1.0:
                raise ValidationError(f"accuracy {name}={value} outside [0, 1]")
        for value in (self.pad_before, self.pad_after):
            if not math.isnan(value) and not 0.0 <= value <= 2.0:
                raise ValidationError(f"proxy distance {value} outside [0, 2]")


def read_manifest(path) -> list[BenchTask]:
    """Task list: one CSV row per task, ``name, source, target[, overrides]``.

    The overrides field holds ``key=value`` settings separated by
    semicolons or whitespace; ``#`` lines are comments.
    """
    tasks = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(line for line in fh if line.strip() and not line.lstrip().startswith("#"))
        for lineno, rec in enumerate(rows, start=1):
            rec = [f.strip() for f in rec]
            if len(rec) < 3:
                raise ValidationError(
                    f"{path}: task line {lineno} needs name, source_path, target_path"
                )
            overrides = {}
            if len(rec) > 3 and rec[3]:
                overrides = parse_config_text(rec[3].replace(";", "\n"), name=f"{path}:{lineno}")
            tasks.append(BenchTask(rec[0], rec[1], rec[2], overrides))
    return tasks


def _load_task_matrix(path: str, fmt: str) -> LabeledMatrix:
    if fmt == "auto":
        fmt = "csv" if path.lower().endswith(".csv") else "svmlight"
    return load_sparse(path, fmt=fmt)


def load_pair(
    source_path: str,
    target_path: str,
    class_count: int | None = None,
    fmt: str = "auto",
) -> DomainPair:
    """Load and validate a source/target pair from disk.

    Unspecified ``class_count`` is inferred from the source labels.
    """
    source = _load_task_matrix(source_path, fmt)
    target = _load_task_matrix(target_path, fmt)
    if source.labels is None:
        raise ValidationError(f"{source_path}: source file must carry labels")
    if class_count is None:
        class_count = int(source.labels.max()) + 1
    return make_domain_pair(source, target, class_count)


def _run_task(args) -> EvalReport:
    task, base_config, folds = args
    overrides = dict(task.overrides)
    fmt = str(overrides.pop("input_format", "auto"))
    if not (Path(task.source_path).exists() and Path(task.target_path).exists()):
        return EvalReport(task.name, status="skipped", reason="missing dataset file")
    try:
        config = base_config.updated(overrides)
        timings: dict[str, float] = {}
        tic = time.perf_counter()
        pair = load_pair(task.source_path, task.target_path, config.class_count, fmt)
        timings["load"] = time.perf_counter() - tic

        xs, xt = pair.source.values, pair.target.values
        truth = pair.target_truth

        tic = time.perf_counter()
        baseline = train_linear(
            xs, pair.source.labels,
            reg=config.clf_reg, max_iter=config.clf_max_iter,
            tol=config.clf_tol, class_count=pair.class_count,
        )
        acc_raw = accuracy(predict(baseline, xt), truth) if truth is not None else math.nan
        timings["baseline"] = time.perf_counter() - tic

        tic = time.perf_counter()
        pad_before = proxy_a_distance(xs, xt, folds=folds, seed=config.rng_seed)
        timings["pad_raw"] = time.perf_counter() - tic

        tic = time.perf_counter()
        result = run_ssrlda(pair, config)
        acc_adapted = (
            accuracy(result.target_predictions, truth) if truth is not None else math.nan
        )
        timings["adapt"] = time.perf_counter() - tic

        tic = time.perf_counter()
        rep = result.representation
        feats = np.hstack([rep.h1, rep.h2])
        n_s = xs.shape[0]
        pad_after = proxy_a_distance(feats[:n_s], feats[n_s:], folds=folds, seed=config.rng_seed)
        timings["pad_adapted"] = time.perf_counter() - tic

        return EvalReport(
            task.name,
            accuracies={"svm_raw": acc_raw, "ssrlda": acc_adapted},
            pad_before=pad_before,
            pad_after=pad_after,
            config=config.snapshot(),
            timings=timings,
        )
    except Exception as exc:
        return EvalReport(
            task.name, status="error", reason=f"{type(exc).__name__}: {exc}"
        )


def run_benchmark(
    manifest_path,
    base_config: AdaptConfig | None = None,
    jobs: int = 1,
    folds: int = 5,
) -> list[EvalReport]:
    """Run every task in a manifest; missing files skip, failures record.

    Reports come back sorted by task name for deterministic aggregation.
    """
    tasks = read_manifest(manifest_path)
    base = base_config if base_config is not None else AdaptConfig()
    work = [(task, base, folds) for task in tasks]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_task, work))
    else:
        reports = [_run_task(item) for item in work]
    for report in reports:
        if report.status == "skipped":
            print(f"warning: task {report.task} skipped: {report.reason}", file=sys.stderr)
    return sorted(reports, key=lambda r: r.task)


def run_ablation(pair: DomainPair, config: AdaptConfig) -> dict[str, float]:
    """Target accuracy of the full pipeline and its two single-block variants."""
    if pair.target_truth is None:
        raise ValidationError("ablation scoring needs target truth labels")
    out = {}
    for which in ("full", "omda_ad", "ommda"):
        result = run_variant(pair, config, which)
        out[which] = accuracy(result.target_predictions, pair.target_truth)
    return out


# ---------------------------------------------------------------------------
# tabular serialization


def write_sweep_csv(cells: list[SweepCell], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "accuracy", "error"])
        for cell in cells:
            writer.writerow([cell.axis, repr(cell.value), repr(cell.accuracy), cell.error])


def read_sweep_csv(path) -> list[SweepCell]:
    out = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                SweepCell(rec["axis"], float(rec["value"]), float(rec["accuracy"]), rec["error"])
            )
    return out


_REPORT_COLUMNS = (
    "task", "status", "reason", "acc_svm_raw", "acc_ssrlda",
    "pad_before", "pad_after", "seconds_total",
)


def write_reports_csv(reports: list[EvalReport], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for r in reports:
            writer.writerow(
                [
                    r.task,
                    r.status,
                    r.reason,
                    repr(r.accuracies.get("svm_raw", math.nan)),
                    repr(r.accuracies.get("ssrlda", math.nan)),
                    repr(r.pad_before),
                    repr(r.pad_after),
                    repr(sum(r.timings.values())),
                ]
            )


def read_reports_csv(path) -> list[EvalReport]:
    out = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                EvalReport(
                    rec["task"],
                    status=rec["status"],
                    reason=rec["reason"],
                    accuracies={
                        "svm_raw": float(rec["acc_svm_raw"]),
                        "ssrlda": float(rec["acc_ssrlda"]),
                    },
                    pad_before=float(rec["pad_before"]),
                    pad_after=float(rec["pad_after"]),
                    timings={"total": float(rec["seconds_total"])},
                )
            )
    return out


def write_summary_text(reports: list[EvalReport], path) -> None:
    """Human-readable per-task accuracy table (percentages)."""

    def pct(x):
        return "--" if math.isnan(x) else f"{100.0 * x:6.2f}"

    lines = [f"{'task':<24} {'SVM':>8} {'adapted':>8} {'dA raw':>8} {'dA new':>8}  status"]
    for r in reports:
        lines.append(
            f"{r.task:<24} {pct(r.accuracies.get('svm_raw', math.nan)):>8} "
            f"{pct(r.accuracies.get('ssrlda', math.nan)):>8} "
            f"{r.pad_before:8.3f} {r.pad_after:8.3f}  {r.status}"
            if r.status == "ok"
            else f"{r.task:<24} {'--':>8} {'--':>8} {'--':>8} {'--':>8}  {r.status}: {r.reason}"
        )
    ok = [r for r in reports if r.status == "ok"]
    if ok:
        mean_raw = np.nanmean([r.accuracies["svm_raw"] for r in ok])
        mean_new = np.nanmean([r.accuracies["ssrlda"] for r in ok])
        lines.append(f"{'average':<24} {pct(float(mean_raw)):>8} {pct(float(mean_new)):>8}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_exception(exc: BaseException) -> str:
    return "".join(traceback.format_exception_only(type(exc), exc)).strip()
