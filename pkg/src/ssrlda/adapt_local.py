"""Per-class local denoising autoencoders.

The stacked data is partitioned by class (source labels, target pseudo
labels); each class gets its own closed-form denoiser whose alignment
penalty is the marginal discrepancy between that class's source and
target rows. Encoded subsets are scattered back to the original instance
order so that local features line up row-by-row with the global ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import denoiser
from .denoiser import NoiseSpec
from .errors import AllClassesSkippedError, SingularSystemError, ValidationError
from .mmd import build_marginal_mmd


@dataclass
class ClassPartition:
    """Class-wise subsets of the stacked data.

    ``subsets[c]`` stacks the class-c source rows then the class-c target
    rows; ``origin_index[c]`` maps each subset row back to its row in the
    original stacking, and ``source_count[c]`` says how many leading rows
    came from the source domain. Classes empty on either side are listed
    in ``skipped_classes`` and belong to no subset.
    """

    subsets: dict[int, np.ndarray]
    origin_index: dict[int, np.ndarray]
    source_count: dict[int, int]
    skipped_classes: list[int]
    row_class: np.ndarray
    class_count: int

    @property
    def total_rows(self) -> int:
        return self.row_class.shape[0]

    def skipped_row_mask(self) -> np.ndarray:
        """True for original rows whose class has no local subset."""
        return np.isin(self.row_class, self.skipped_classes)

    def with_subsets(self, subsets: dict[int, np.ndarray]) -> "ClassPartition":
        """Same row bookkeeping over re-encoded subset values."""
        if set(subsets) != set(self.subsets):
            raise ValidationError("replacement subsets must cover the same classes")
        return replace(self, subsets=subsets)


@dataclass
class LocalWeights:
    """One reconstruction map per non-skipped class, plus solve residuals."""

    per_class: dict[int, denoiser.LayerWeights]

    def residuals(self) -> dict[int, float]:
        return {c: w.residual for c, w in self.per_class.items()}


def partition_by_class(
    x: np.ndarray,
    source_labels: np.ndarray,
    target_pseudo_labels: np.ndarray,
    class_count: int,
) -> ClassPartition:
    """Split stacked data into per-class subsets, source rows first.

    Within a class the original ordering is preserved. Raises if every
    class is empty on one side (no subset could be formed).
    """
    x = np.asarray(x, dtype=np.float64)
    source_labels = np.asarray(source_labels, dtype=np.int64)
    target_pseudo_labels = np.asarray(target_pseudo_labels, dtype=np.int64)
    n_s = source_labels.shape[0]
    n_t = target_pseudo_labels.shape[0]
    if x.shape[0] != n_s + n_t:
        raise ValidationError(f"{x.shape[0]} rows but {n_s} + {n_t} labels")
    for name, labels in (("source", source_labels), ("target", target_pseudo_labels)):
        if labels.size and (labels.min() < 0 or labels.max() >= class_count):
            raise ValidationError(f"{name} labels outside [0, {class_count})")
    subsets: dict[int, np.ndarray] = {}
    origin: dict[int, np.ndarray] = {}
    src_count: dict[int, int] = {}
    skipped: list[int] = []
    for c in range(class_count):
        src = np.nonzero(source_labels == c)[0]
        tgt = n_s + np.nonzero(target_pseudo_labels == c)[0]
        if src.size == 0 or tgt.size == 0:
            skipped.append(c)
            continue
        rows = np.concatenate([src, tgt])
        subsets[c] = x[rows]
        origin[c] = rows
        src_count[c] = int(src.size)
    if not subsets:
        raise AllClassesSkippedError(
            "every class is empty in at least one domain; no local subsets"
        )
    row_class = np.concatenate([source_labels, target_pseudo_labels])
    return ClassPartition(subsets, origin, src_count, skipped, row_class, class_count)


def solve_mmda(
    partition: ClassPartition,
    noise: NoiseSpec,
    lam: float,
    beta: float,
    append_bias: bool = False,
) -> LocalWeights:
    """One closed-form solve per class subset.

    Each class's alignment matrix is the marginal coefficient matrix of
    its own source/target split; the classes do not couple, so the joint
    objective separates into these independent systems.
    """
    per_class: dict[int, denoiser.LayerWeights] = {}
    for c in sorted(partition.subsets):
        sub = partition.subsets[c]
        n_src = partition.source_count[c]
        m = build_marginal_mmd(n_src, sub.shape[0] - n_src)
        stats = denoiser.expected_stats(sub, noise, mmd_sum=m, append_bias=append_bias)
        try:
            per_class[c] = denoiser.solve_system(stats, lam, beta)
        except SingularSystemError as exc:
            raise SingularSystemError(f"class {c}: {exc}") from exc
    return LocalWeights(per_class)


def encode_local(
    partition: ClassPartition, weights: LocalWeights, total_rows: int
) -> np.ndarray:
    """tanh-encode every subset and scatter rows back to original order.

    Rows of skipped classes are zero-filled (``partition.skipped_row_mask``
    flags exactly those rows).
    """
    missing = set(partition.subsets) - set(weights.per_class)
    if missing:
        raise ValidationError(f"weights missing for classes {sorted(missing)}")
    width = next(iter(weights.per_class.values())).w.shape[1]
    out = np.zeros((total_rows, width))
    for c, sub in partition.subsets.items():
        idx = partition.origin_index[c]
        if idx.size and (idx.min() < 0 or idx.max() >= total_rows):
            raise ValidationError(
                f"class {c} origin index out of range for {total_rows} rows"
            )
        out[idx] = denoiser.encode(sub, weights.per_class[c])
    return out
