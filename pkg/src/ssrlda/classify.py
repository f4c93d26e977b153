"""Linear large-margin classifier (hinge loss, one-vs-rest).

Training minimizes ``0.5*reg*||w||^2 + sum_i max(0, 1 - y_i f(x_i))`` per
class via deterministic cyclic coordinate descent on the dual, with the
intercept handled as a regularized constant feature. No randomness is
involved, so identical inputs give bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass
class LinearModel:
    """One weight row and intercept per class, plus training metadata."""

    weights: np.ndarray
    intercepts: np.ndarray
    loss: float = float("nan")
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.intercepts = np.atleast_1d(np.asarray(self.intercepts, dtype=np.float64))
        if self.weights.shape[0] != self.intercepts.shape[0]:
            raise ValidationError("one intercept per class row required")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.intercepts))):
            raise ValidationError("model parameters must be finite")

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.feature_dim:
            raise ValidationError(
                f"input has {x.shape[1] if x.ndim == 2 else '?'} features, "
                f"model expects {self.feature_dim}"
            )
        return x @ self.weights.T + self.intercepts


def _binary_subproblem(
    xa: np.ndarray, ysign: np.ndarray, c_upper: float, max_iter: int, tol: float
):
    """Cyclic dual coordinate descent for one binary hinge-loss problem.

    Returns (augmented weights, final primal objective in the C-scaled
    form, epochs used, converged flag).
    """
    n = xa.shape[0]
    alpha = np.zeros(n)
    w = np.zeros(xa.shape[1])
    qii = np.einsum("ij,ij->i", xa, xa)
    qii = np.maximum(qii, np.finfo(float).tiny)

    def primal(wv):
        margins = 1.0 - ysign * (xa @ wv)
        return 0.5 * float(wv @ wv) + c_upper * float(np.maximum(margins, 0.0).sum())

    prev = primal(w)
    epochs = 0
    converged = False
    for epochs in range(1, max_iter + 1):
        changed = 0.0
        for i in range(n):
            g = ysign[i] * (xa[i] @ w) - 1.0
            a_new = min(max(alpha[i] - g / qii[i], 0.0), c_upper)
            delta = a_new - alpha[i]
            if delta != 0.0:
                w = w + delta * ysign[i] * xa[i]
                alpha[i] = a_new
                changed = max(changed, abs(delta))
        obj = primal(w)
        rel = abs(prev - obj) / max(abs(prev), np.finfo(float).tiny)
        prev = obj
        if changed == 0.0 or rel <= tol:
            converged = True
            break
    return w, prev, epochs, converged


def train_linear(
    x: np.ndarray,
    y: np.ndarray,
    reg: float = 1.0,
    max_iter: int = 1000,
    tol: float = 1e-6,
    class_count: int | None = None,
) -> LinearModel:
    """Fit a one-vs-rest linear hinge-loss model.

    Stops each subproblem when the relative decrease of the regularized
    hinge objective over an epoch drops below ``tol`` or after ``max_iter``
    epochs; the model records the summed final objective, the largest epoch
    count, and whether every subproblem converged.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValidationError(f"bad shapes: x {x.shape}, y {y.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("training rows must be finite")
    if reg <= 0:
        raise ValidationError("reg must be positive")
    if np.unique(y).size < 2:
        raise ValidationError("need at least two classes to train")
    n_classes = class_count if class_count is not None else int(y.max()) + 1
    if n_classes < 2 or y.min() < 0 or y.max() >= n_classes:
        raise ValidationError(f"labels outside [0, {n_classes})")

    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    c_upper = 1.0 / reg
    weights = np.zeros((n_classes, x.shape[1]))
    intercepts = np.zeros(n_classes)
    total_loss = 0.0
    max_epochs = 0
    all_converged = True
    for c in range(n_classes):
        ysign = np.where(y == c, 1.0, -1.0)
        w_aug, obj, epochs, ok = _binary_subproblem(xa, ysign, c_upper, max_iter, tol)
        weights[c] = w_aug[:-1]
        intercepts[c] = w_aug[-1]
        total_loss += reg * obj  # back to the 0.5*reg*||w||^2 + sum hinge scale
        max_epochs = max(max_epochs, epochs)
        all_converged = all_converged and ok
    return LinearModel(weights, intercepts, float(total_loss), max_epochs, all_converged)


def predict(model: LinearModel, x: np.ndarray) -> np.ndarray:
    """Argmax over class scores; ties go to the lowest class index."""
    return np.argmax(model.scores(x), axis=1).astype(np.int64)


def accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of exact matches between two equally long label vectors."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValidationError(f"shape mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValidationError("cannot score empty predictions")
    return float(np.mean(predicted == truth))


def save_model(model: LinearModel, path) -> None:
    """Flat text dump: one line per class, intercept then weights."""
    with open(Path(path), "w", encoding="utf-8") as fh:
        for c in range(model.class_count):
            parts = [repr(float(model.intercepts[c]))]
            parts.extend(repr(float(v)) for v in model.weights[c])
            fh.write(" ".join(parts) + "\n")


def load_model(path) -> LinearModel:
    """Inverse of :func:`save_model`; training metadata is not recovered."""
    rows = []
    with open(Path(path), "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValidationError(f"{path}: empty model file")
    arr = np.array(rows)
    return LinearModel(arr[:, 1:], arr[:, 0])
