"""Stacked dual-representation pipeline with pseudo-label refinement.

An initial classifier on raw source features seeds target pseudo labels.
Each outer iteration ``z`` then rebuilds, from scratch and under the
current pseudo-label snapshot, a ``z``-layer stack of global
(distribution-adapting) encoders and a ``z``-layer stack of per-class
local encoders; a classifier trained on the concatenated source features
refreshes the pseudo labels for the next iteration. Layer ``k`` always
encodes the clean output of layer ``k-1``; corruption lives only inside
the expectation matrices of the closed-form solves.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .adapt_global import GlobalAdaptProblem, aggregate_mmd, encode_global, solve_mda_ad
from .adapt_local import encode_local, partition_by_class, solve_mmda
from .classify import LinearModel, accuracy, predict, train_linear
from .dataio import DomainPair
from .denoiser import NoiseSpec
from .errors import ValidationError

VARIANTS = ("full", "omda_ad", "ommda")

_KEY_ALIASES = {
    "l": "layers",
    "p": "noise_p",
    "lambda": "lam",
    "seed": "rng_seed",
}

_NORMALIZE_CHOICES = ("none", "l2")


@dataclass
class AdaptConfig:
    """Hyper-parameters of one pipeline run."""

    layers: int = 1
    noise_p: float = 0.5
    lam: float = 1.0
    beta: float = 1.0
    class_count: int | None = None  # None: take the DomainPair's declared count
    include_raw_features: bool = False
    append_bias: bool = False
    normalize: str = "none"
    fast_stacking: bool = False
    clf_reg: float = 1.0
    clf_max_iter: int = 1000
    clf_tol: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.layers < 1:
            raise ValidationError("layers must be >= 1")
        if not 0.0 <= self.noise_p < 1.0:
            raise ValidationError("noise_p must be in [0, 1)")
        if self.lam < 0 or self.beta < 0:
            raise ValidationError("lam and beta must be nonnegative")
        if self.class_count is not None and self.class_count < 1:
            raise ValidationError("class_count must be >= 1")
        if self.normalize not in _NORMALIZE_CHOICES:
            raise ValidationError(f"normalize must be one of {_NORMALIZE_CHOICES}")
        if self.clf_reg <= 0 or self.clf_tol <= 0 or self.clf_max_iter < 1:
            raise ValidationError("bad classifier settings")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "AdaptConfig":
        fields = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for raw_key, value in mapping.items():
            key = _KEY_ALIASES.get(str(raw_key).strip().lower(), str(raw_key).strip().lower())
            if key not in fields:
                raise ValidationError(f"unknown config key {raw_key!r}")
            kwargs[key] = _coerce(key, value)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "AdaptConfig":
        """Parse a JSON object or line-oriented ``key=value`` file."""
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_mapping(parse_config_text(text, name=str(path)))

    def updated(self, overrides: dict) -> "AdaptConfig":
        merged = self.snapshot()
        merged.update(overrides)
        return AdaptConfig.from_mapping(merged)

    def snapshot(self) -> dict:
        return asdict(self)

    def with_axis(self, axis: str, value) -> "AdaptConfig":
        """Return a copy with one sweep axis (l, p, beta, lambda) replaced."""
        field_name = _KEY_ALIASES.get(axis, axis)
        if field_name not in ("layers", "noise_p", "beta", "lam"):
            raise ValidationError(f"unknown sweep axis {axis!r}")
        return replace(self, **{field_name: _coerce(field_name, value)})


_BOOL_FIELDS = {"include_raw_features", "append_bias", "fast_stacking"}
_INT_FIELDS = {"layers", "class_count", "clf_max_iter", "rng_seed"}
_FLOAT_FIELDS = {"noise_p", "lam", "beta", "clf_reg", "clf_tol"}


def _coerce(key: str, value):
    if value is None:
        return None
    if key in _BOOL_FIELDS:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"cannot read boolean {key}={value!r}")
    if key in _INT_FIELDS:
        num = float(value)
        if num != int(num):
            raise ValidationError(f"{key} must be an integer, got {value!r}")
        return int(num)
    if key in _FLOAT_FIELDS:
        return float(value)
    return str(value).strip()


def parse_config_text(text: str, name: str = "<config>") -> dict:
    """Key=value lines (# comments allowed) or a JSON object."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        loaded = json.loads(text)
        if not isinstance(loaded, dict):
            raise ValidationError(f"{name}: top-level JSON value must be an object")
        return loaded
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValidationError(f"{name}: expected key=value at line {lineno}")
        key, value = body.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


@dataclass
class TraceEntry:
    """Bookkeeping for one outer iteration."""

    iteration: int
    pseudo_accuracy: float
    global_residual: float
    local_residual: float
    degenerate: bool
    feature_width: int


@dataclass
class DualRepresentation:
    """Concatenated global (h1) and local (h2) stacked features.

    Row ``i`` of both blocks describes original instance ``i`` (source rows
    first). ``layer_boundaries`` gives the column offset of each layer
    within either block; ``raw`` holds the raw-feature block when the
    pipeline was configured to expose it to the classifier.
    """

    h1: np.ndarray
    h2: np.ndarray
    layer_boundaries: list[int]
    raw: np.ndarray | None = None

    def __post_init__(self):
        if self.h1.shape != self.h2.shape:
            raise ValidationError(f"h1 {self.h1.shape} and h2 {self.h2.shape} must match")


@dataclass
class PipelineResult:
    model: LinearModel
    representation: DualRepresentation
    target_predictions: np.ndarray
    trace: list[TraceEntry] = field(default_factory=list)


def _normalize_rows(x: np.ndarray, mode: str) -> np.ndarray:
    if mode == "none":
        return x
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, np.finfo(float).tiny)


def run_ssrlda(pair: DomainPair, config: AdaptConfig) -> PipelineResult:
    """Full pipeline: both feature blocks feed the classifier."""
    return run_variant(pair, config, "full")


def run_variant(pair: DomainPair, config: AdaptConfig, which: str = "full") -> PipelineResult:
    """Pipeline run with a chosen classifier input.

    ``full`` trains on [h1, h2], ``omda_ad`` on the global block only,
    ``ommda`` on the local block only. Both blocks are always computed, so
    ``full`` is bit-identical to :func:`run_ssrlda`. When an iteration's
    pseudo labels collapse to a single class, that iteration's classifier
    falls back to global features and the local block is zero-filled.
    """
    which = which.lower()
    if which not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {which!r}")
    class_count = pair.class_count if config.class_count is None else config.class_count
    if class_count != pair.class_count:
        raise ValidationError(
            f"config.class_count={config.class_count} but pair declares {pair.class_count}"
        )
    xs = _normalize_rows(pair.source.values, config.normalize)
    xt = _normalize_rows(pair.target.values, config.normalize)
    y_s = pair.source.labels
    truth = pair.target_truth
    n_s = xs.shape[0]
    dim = xs.shape[1]
    x0 = np.vstack([xs, xt])
    total = x0.shape[0]
    noise = NoiseSpec(config.noise_p, config.rng_seed)
    clf_kwargs = dict(
        reg=config.clf_reg,
        max_iter=config.clf_max_iter,
        tol=config.clf_tol,
        class_count=class_count,
    )

    base = train_linear(xs, y_s, **clf_kwargs)
    pseudo = predict(base, xt)

    model = base
    trace: list[TraceEntry] = []
    h1 = h2 = None
    schedule = [config.layers] if config.fast_stacking else range(1, config.layers + 1)
    for z in schedule:
        degenerate = np.unique(pseudo).size == 1

        problem = GlobalAdaptProblem(
            x0, y_s, pseudo, noise, config.lam, config.beta,
            class_count, config.append_bias,
        )
        mmd_sum = aggregate_mmd(problem)
        cur = x0
        h1_blocks = []
        global_residual = 0.0
        for _ in range(z):
            layer = solve_mda_ad(replace(problem, x=cur), mmd_sum=mmd_sum)
            cur = encode_global(cur, layer)
            h1_blocks.append(cur)
            global_residual = max(global_residual, layer.residual)
        h1 = np.hstack(h1_blocks)

        if degenerate:
            warnings.warn(
                "pseudo labels collapsed to one class; "
                "training on global features only for this iteration",
                stacklevel=2,
            )
            h2 = np.zeros_like(h1)
            local_residual = float("nan")
        else:
            part = partition_by_class(x0, y_s, pseudo, class_count)
            h2_blocks = []
            local_residual = 0.0
            for _ in range(z):
                local = solve_mmda(part, noise, config.lam, config.beta, config.append_bias)
                full = encode_local(part, local, total)
                h2_blocks.append(full)
                local_residual = max(local_residual, max(local.residuals().values()))
                part = part.with_subsets(
                    {c: full[part.origin_index[c]] for c in part.subsets}
                )
            h2 = np.hstack(h2_blocks)

        if degenerate:
            blocks = [h1]
        elif which == "omda_ad":
            blocks = [h1]
        elif which == "ommda":
            blocks = [h2]
        else:
            blocks = [h1, h2]
        if config.include_raw_features:
            blocks = blocks + [x0]
        feats = np.hstack(blocks)
        model = train_linear(feats[:n_s], y_s, **clf_kwargs)
        pseudo = predict(model, feats[n_s:])
        trace.append(
            TraceEntry(
                iteration=z,
                pseudo_accuracy=accuracy(pseudo, truth) if truth is not None else math.nan,
                global_residual=global_residual,
                local_residual=local_residual,
                degenerate=degenerate,
                feature_width=feats.shape[1],
            )
        )

    boundaries = [dim * k for k in range(len(h1_blocks) + 1)]
    rep = DualRepresentation(
        h1, h2, boundaries, raw=x0 if config.include_raw_features else None
    )
    return PipelineResult(model, rep, pseudo, trace)


_TRACE_COLUMNS = (
    "iteration",
    "pseudo_accuracy",
    "global_residual",
    "local_residual",
    "degenerate",
    "feature_width",
)


def write_trace_csv(trace: list[TraceEntry], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_COLUMNS)
        for entry in trace:
            writer.writerow(
                [
                    entry.iteration,
                    repr(entry.pseudo_accuracy),
                    repr(entry.global_residual),
                    repr(entry.local_residual),
                    int(entry.degenerate),
                    entry.feature_width,
                ]
            )


def read_trace_csv(path) -> list[TraceEntry]:
    out = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            out.append(
                TraceEntry(
                    iteration=int(rec["iteration"]),
                    pseudo_accuracy=float(rec["pseudo_accuracy"]),
                    global_residual=float(rec["global_residual"]),
                    local_residual=float(rec["local_residual"]),
                    degenerate=bool(int(rec["degenerate"])),
                    feature_width=int(rec["feature_width"]),
                )
            )
    return out
