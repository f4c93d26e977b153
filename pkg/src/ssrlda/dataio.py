"""Loading, validation, and preparation of source/target feature matrices.

Instances are rows, features are columns. Two text formats are supported:

* ``svmlight``: one instance per line, ``<label> <idx>:<val> ...`` with
  1-based feature indices. With ``labeled=False`` the leading label token
  is absent. Lines starting with ``#`` are comments; a ``# features: <d>``
  comment pins the feature dimension so all-zero trailing columns survive
  a write/load round trip.
* ``csv``: dense rows under a header; a column literally named ``label``
  carries the class, any other columns are features.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

FORMATS = ("svmlight", "csv")


@dataclass
class LabeledMatrix:
    """Instance-by-feature matrix with optional per-instance integer labels."""

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError(f"values must be 2-D, got shape {self.values.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.ndim != 1 or self.labels.shape[0] != self.values.shape[0]:
                raise ValidationError(
                    f"labels must be one per instance: {self.labels.shape} vs "
                    f"{self.values.shape[0]} rows"
                )

    @property
    def instance_count(self) -> int:
        return self.values.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.values.shape[1]

    def without_labels(self) -> "LabeledMatrix":
        return LabeledMatrix(self.values, None)


@dataclass
class DomainPair:
    """A labeled source domain and an unlabeled target domain.

    Target labels, when present in the input, are moved to ``target_truth``
    and used only for scoring; the pipeline never reads them.
    """

    source: LabeledMatrix
    target: LabeledMatrix
    class_count: int
    target_truth: np.ndarray | None = field(default=None)

    @property
    def feature_dim(self) -> int:
        return self.source.feature_dim


def _parse_float(tok: str, path, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"{path}: malformed value {tok!r} at line {lineno}") from None


def _parse_label(tok: str, path, lineno: int) -> int:
    try:
        val = float(tok)
        if val != int(val):
            raise ValueError
        return int(val)
    except ValueError:
        raise ParseError(f"{path}: malformed label {tok!r} at line {lineno}") from None


def _load_svmlight(path: Path, labeled: bool) -> LabeledMatrix:
    rows: list[dict[int, float]] = []
    labels: list[int] = []
    max_index = 0
    declared_dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if stripped.startswith("#"):
                body = stripped.lstrip("#").strip()
                if body.startswith("features:"):
                    declared_dim = _parse_label(body.split(":", 1)[1].strip(), path, lineno)
                continue
            if not stripped:
                continue
            tokens = stripped.split()
            if labeled:
                labels.append(_parse_label(tokens[0], path, lineno))
                tokens = tokens[1:]
            entries: dict[int, float] = {}
            for tok in tokens:
                if ":" not in tok:
                    raise ParseError(f"{path}: malformed entry {tok!r} at line {lineno}")
                idx_str, val_str = tok.split(":", 1)
                idx = _parse_label(idx_str, path, lineno)
                if idx < 1:
                    raise ParseError(
                        f"{path}: feature index {idx} at line {lineno} is not 1-based"
                    )
                if idx in entries:
                    raise ParseError(
                        f"{path}: duplicate feature index {idx} at line {lineno}"
                    )
                entries[idx] = _parse_float(val_str, path, lineno)
                max_index = max(max_index, idx)
            rows.append(entries)
    dim = max(max_index, declared_dim or 0)
    values = np.zeros((len(rows), dim))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            values[i, idx - 1] = val
    return LabeledMatrix(values, np.array(labels, dtype=np.int64) if labeled else None)


def _load_csv(path: Path, labeled: bool) -> LabeledMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return LabeledMatrix(np.zeros((0, 0)), np.zeros(0, dtype=np.int64) if labeled else None)
        header = [h.strip() for h in header]
        label_col = header.index("label") if "label" in header else None
        feature_cols = [j for j in range(len(header)) if j != label_col]
        rows = []
        labels: list[int] | None = [] if (labeled and label_col is not None) else None
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"{path}: expected {len(header)} fields at line {lineno}, got {len(rec)}"
                )
            if labels is not None:
                labels.append(_parse_label(rec[label_col], path, lineno))
            rows.append([_parse_float(rec[j], path, lineno) for j in feature_cols])
    values = np.array(rows) if rows else np.zeros((0, len(feature_cols)))
    return LabeledMatrix(values, np.array(labels, dtype=np.int64) if labels is not None else None)


def load_sparse(path, fmt: str = "svmlight", labeled: bool = True) -> LabeledMatrix:
    """Load a matrix from ``path``.

    ``fmt`` is one of ``svmlight`` or ``csv``; ``labeled=False`` gives
    no-labels semantics (the label token/column is absent or ignored).
    """
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "svmlight":
        return _load_svmlight(path, labeled)
    return _load_csv(path, labeled)


def save_matrix(matrix: LabeledMatrix, path, fmt: str = "svmlight") -> None:
    """Write ``matrix`` so that :func:`load_sparse` reproduces it exactly."""
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if fmt == "svmlight":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# features: {matrix.feature_dim}\n")
            for i in range(matrix.instance_count):
                parts = []
                if matrix.labels is not None:
                    parts.append(str(int(matrix.labels[i])))
                row = matrix.values[i]
                for j in np.nonzero(row)[0]:
                    parts.append(f"{j + 1}:{float(row[j])!r}")
                fh.write(" ".join(parts) + "\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{j}" for j in range(matrix.feature_dim)]
        if matrix.labels is not None:
            header = ["label"] + header
        writer.writerow(header)
        for i in range(matrix.instance_count):
            rec = [repr(float(v)) for v in matrix.values[i]]
            if matrix.labels is not None:
                rec = [str(int(matrix.labels[i]))] + rec
            writer.writerow(rec)


def select_top_frequent_features(
    data: list[LabeledMatrix], k: int
) -> tuple[list[LabeledMatrix], np.ndarray]:
    """Keep the ``k`` columns with the highest total count over all matrices.

    Ties rank the lower original index first. The kept columns are returned
    in ascending original order, identically for every matrix, so
    ``k == feature_dim`` is the identity projection.
    """
    if not data:
        raise ValidationError("need at least one matrix")
    dim = data[0].feature_dim
    for m in data:
        if m.feature_dim != dim:
            raise ValidationError(
                f"feature_dim mismatch: {m.feature_dim} vs {dim}"
            )
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > dim:
        raise ValidationError(f"k={k} exceeds feature_dim={dim}")
    totals = np.zeros(dim)
    for m in data:
        totals += m.values.sum(axis=0)
    # sort by count descending, index ascending on ties
    ranked = np.lexsort((np.arange(dim), -totals))
    kept = np.sort(ranked[:k])
    projected = [replace(m, values=m.values[:, kept]) for m in data]
    return projected, kept


def make_domain_pair(
    source: LabeledMatrix, target: LabeledMatrix, class_count: int
) -> DomainPair:
    """Validate and assemble a source/target pair for adaptation.

    Requires matching feature dimensions and at least one source instance
    of every class in ``0..class_count``. Target labels, if any, are kept
    only as held-out truth.
    """
    if source.labels is None:
        raise ValidationError("source labels are required")
    if class_count < 1:
        raise ValidationError("class_count must be >= 1")
    if source.feature_dim != target.feature_dim:
        raise ValidationError(
            f"feature_dim mismatch: source {source.feature_dim}, target {target.feature_dim}"
        )
    _check_label_range(source.labels, class_count, "source")
    present = np.unique(source.labels)
    missing = sorted(set(range(class_count)) - set(present.tolist()))
    if missing:
        raise ValidationError(f"source is missing classes {missing}")
    truth = None
    if target.labels is not None:
        _check_label_range(target.labels, class_count, "target")
        truth = target.labels.copy()
    return DomainPair(source, target.without_labels(), class_count, truth)


def _check_label_range(labels: np.ndarray, class_count: int, name: str) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValidationError(
            f"{name} labels must lie in [0, {class_count}); "
            f"saw range [{labels.min()}, {labels.max()}]"
        )
