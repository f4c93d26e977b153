"""Figure rendering for the report paths.

Each CLI report writes a PNG next to its CSV/JSON output. All plots go
through the Agg backend so the CLI works headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evalcli import EvalReport, SweepCell  # noqa: E402
from .pipeline import TraceEntry  # noqa: E402

DPI = 150


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def save_sweep_figure(cells: list[SweepCell], path) -> Path:
    """Accuracy against the swept parameter; failed cells are dropped."""
    good = [c for c in cells if not c.error and not math.isnan(c.accuracy)]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if good:
        xs = [c.value for c in good]
        ys = [c.accuracy for c in good]
        ax.plot(xs, ys, "o-")
        axis = good[0].axis
        if axis in ("beta", "lambda") and min(xs) > 0 and max(xs) / max(min(xs), 1e-300) > 50:
            ax.set_xscale("log")
        ax.set_xlabel(axis)
    ax.set_ylabel("target accuracy")
    ax.set_title("parameter sweep")
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_trace_figure(trace: list[TraceEntry], path) -> Path:
    """Pseudo-label accuracy (when scored) and solve residuals per iteration."""
    iters = [t.iteration for t in trace]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    accs = [t.pseudo_accuracy for t in trace]
    if any(not math.isnan(a) for a in accs):
        ax.plot(iters, accs, "o-", label="pseudo-label accuracy")
        ax.set_ylabel("accuracy")
    else:
        ax.plot(iters, [t.global_residual for t in trace], "o-", label="global residual")
        ax.set_yscale("log")
        ax.set_ylabel("solve residual")
    ax.set_xlabel("outer iteration")
    ax.set_xticks(iters)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_bench_figure(reports: list[EvalReport], path) -> Path:
    """Grouped accuracy bars plus domain-distance bars per completed task."""
    ok = [r for r in reports if r.status == "ok"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    if ok:
        names = [r.task for r in ok]
        pos = range(len(ok))
        width = 0.38
        ax1.bar([p - width / 2 for p in pos],
                [r.accuracies.get("svm_raw", math.nan) for r in ok],
                width, label="SVM raw")
        ax1.bar([p + width / 2 for p in pos],
                [r.accuracies.get("ssrlda", math.nan) for r in ok],
                width, label="adapted")
        ax1.set_xticks(list(pos), names, rotation=30, ha="right")
        ax2.bar([p - width / 2 for p in pos], [r.pad_before for r in ok], width, label="raw")
        ax2.bar([p + width / 2 for p in pos], [r.pad_after for r in ok], width, label="adapted")
        ax2.set_xticks(list(pos), names, rotation=30, ha="right")
    ax1.set_ylabel("target accuracy")
    ax1.set_title("accuracy")
    ax1.legend()
    ax2.set_ylabel("proxy A-distance")
    ax2.set_title("domain distance")
    ax2.legend()
    return _finish(fig, path)


def save_ablation_figure(accuracies: dict[str, float], path) -> Path:
    """Bar chart of the full pipeline against its single-block variants."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    names = list(accuracies)
    ax.bar(names, [accuracies[k] for k in names])
    ax.set_ylabel("target accuracy")
    ax.set_title("feature-block ablation")
    ax.grid(True, axis="y", alpha=0.3)
    return _finish(fig, path)
