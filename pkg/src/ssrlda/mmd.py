"""Maximum-mean-discrepancy coefficient matrices (linear kernel).

With the linear kernel, the squared MMD between two sets of rows is the
squared Euclidean distance between their mean rows. For stacked data
(source rows first, target rows after) the same quantity can be written
as a quadratic form ``tr(A' M A)`` where M is a coefficient matrix over
instances; both the marginal matrix and the per-class conditional
matrices below follow that construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# class_index of a matrix produced by sum_mmd_matrices
AGGREGATE = -1


@dataclass
class MmdMatrix:
    """Coefficient matrix of a squared-MMD quadratic form over instances.

    ``class_index`` is 0 for the marginal matrix, ``c >= 1`` for the
    conditional matrix of class ``c - 1``, and ``AGGREGATE`` for a sum.
    ``skipped`` marks a conditional matrix whose class was empty on one
    side; it is all-zero and contributes nothing.
    """

    coefficients: np.ndarray
    class_index: int
    skipped: bool = False

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 2 or self.coefficients.shape[0] != self.coefficients.shape[1]:
            raise ValidationError(f"coefficients must be square, got {self.coefficients.shape}")
        self.coefficients.setflags(write=False)

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]


def build_marginal_mmd(n_s: int, n_t: int) -> MmdMatrix:
    """Marginal coefficient matrix for ``n_s`` source rows then ``n_t`` target rows.

    Entries are 1/(n_s*n_s) within the source block, 1/(n_t*n_t) within the
    target block, and -1/(n_s*n_t) across blocks; every row sums to zero.
    """
    if n_s < 1 or n_t < 1:
        raise ValidationError(f"both domains must be non-empty, got n_s={n_s}, n_t={n_t}")
    n = n_s + n_t
    m = np.empty((n, n))
    m[:n_s, :n_s] = 1.0 / (n_s * n_s)
    m[n_s:, n_s:] = 1.0 / (n_t * n_t)
    m[:n_s, n_s:] = -1.0 / (n_s * n_t)
    m[n_s:, :n_s] = -1.0 / (n_s * n_t)
    return MmdMatrix(m, class_index=0)


def build_conditional_mmd(
    source_labels: np.ndarray,
    target_labels: np.ndarray,
    c: int,
    class_count: int,
) -> MmdMatrix:
    """Conditional coefficient matrix restricted to instances of class ``c``.

    ``target_labels`` are pseudo labels. If the class is present in only one
    domain the matrix is returned all-zero with ``skipped=True`` so the
    remaining classes' terms survive; a class absent from both domains is an
    error (its normalizing counts are undefined).
    """
    source_labels = np.asarray(source_labels, dtype=np.int64)
    target_labels = np.asarray(target_labels, dtype=np.int64)
    if not 0 <= c < class_count:
        raise ValidationError(f"class {c} outside [0, {class_count})")
    for name, labels in (("source", source_labels), ("target", target_labels)):
        if labels.size and (labels.min() < 0 or labels.max() >= class_count):
            raise ValidationError(f"{name} labels outside [0, {class_count})")
    n_s = source_labels.shape[0]
    n_t = target_labels.shape[0]
    n = n_s + n_t
    src = np.nonzero(source_labels == c)[0]
    tgt = n_s + np.nonzero(target_labels == c)[0]
    if src.size == 0 and tgt.size == 0:
        raise ValidationError(f"class {c} is empty in both domains")
    if src.size == 0 or tgt.size == 0:
        return MmdMatrix(np.zeros((n, n)), class_index=c + 1, skipped=True)
    m = np.zeros((n, n))
    m[np.ix_(src, src)] = 1.0 / (src.size * src.size)
    m[np.ix_(tgt, tgt)] = 1.0 / (tgt.size * tgt.size)
    m[np.ix_(src, tgt)] = -1.0 / (src.size * tgt.size)
    m[np.ix_(tgt, src)] = -1.0 / (src.size * tgt.size)
    return MmdMatrix(m, class_index=c + 1)


def sum_mmd_matrices(matrices: list[MmdMatrix]) -> MmdMatrix:
    """Elementwise sum, tagged with the AGGREGATE sentinel."""
    if not matrices:
        raise ValidationError("nothing to sum")
    size = matrices[0].size
    for m in matrices:
        if m.size != size:
            raise ValidationError(f"dimension mismatch: {m.size} vs {size}")
    total = np.zeros((size, size))
    for m in matrices:
        total += m.coefficients
    return MmdMatrix(total, class_index=AGGREGATE)


def mmd_squared_linear(a: np.ndarray, b: np.ndarray) -> float:
    """Squared linear-kernel MMD: squared norm of the mean-row difference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValidationError(f"incompatible shapes {a.shape} and {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValidationError("both inputs must be non-empty")
    diff = a.mean(axis=0) - b.mean(axis=0)
    return float(diff @ diff)


def dump_csv(matrix: MmdMatrix, path) -> None:
    """Debug dump of the dense coefficients, loadable by dataio's csv reader."""
    header = ",".join(f"f{j}" for j in range(matrix.size))
    np.savetxt(path, matrix.coefficients, delimiter=",", header=header, comments="")
