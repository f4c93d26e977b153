"""Global denoising autoencoder with distribution adaptation.

Extends the closed-form denoiser with a penalty that shrinks both the
marginal and the per-class (conditional) mean discrepancies between the
source block and the target block of the stacked data. Conditional terms
use source labels and target pseudo labels; the solution stays a single
ridge-type linear system.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import denoiser
from .denoiser import LayerWeights, NoiseSpec
from .errors import ValidationError
from .mmd import MmdMatrix, build_conditional_mmd, build_marginal_mmd, sum_mmd_matrices

log = logging.getLogger(__name__)


@dataclass
class GlobalAdaptProblem:
    """Stacked source+target data with the labels and knobs of one solve."""

    x: np.ndarray
    source_labels: np.ndarray
    target_pseudo_labels: np.ndarray
    noise: NoiseSpec
    lam: float
    beta: float
    class_count: int
    append_bias: bool = field(default=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.source_labels = np.asarray(self.source_labels, dtype=np.int64)
        self.target_pseudo_labels = np.asarray(self.target_pseudo_labels, dtype=np.int64)
        if self.x.shape[0] != self.n_s + self.n_t:
            raise ValidationError(
                f"{self.x.shape[0]} rows but {self.n_s} source + {self.n_t} target labels"
            )
        for name, labels in (
            ("source", self.source_labels),
            ("target", self.target_pseudo_labels),
        ):
            if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
                raise ValidationError(f"{name} labels outside [0, {self.class_count})")
        if self.lam < 0 or self.beta < 0:
            raise ValidationError("lam and beta must be nonnegative")

    @property
    def n_s(self) -> int:
        return self.source_labels.shape[0]

    @property
    def n_t(self) -> int:
        return self.target_pseudo_labels.shape[0]


def aggregate_mmd(problem: GlobalAdaptProblem) -> MmdMatrix:
    """Marginal plus all usable conditional coefficient matrices.

    A class contributes a conditional term only when it has instances in
    both domains under the current pseudo labels; skipped classes are
    logged, and if every conditional term is skipped the marginal matrix
    alone is used (with a warning).
    """
    mats = [build_marginal_mmd(problem.n_s, problem.n_t)]
    skipped = []
    for c in range(problem.class_count):
        in_source = np.any(problem.source_labels == c)
        in_target = np.any(problem.target_pseudo_labels == c)
        if in_source and in_target:
            mats.append(
                build_conditional_mmd(
                    problem.source_labels, problem.target_pseudo_labels, c, problem.class_count
                )
            )
        else:
            skipped.append(c)
    if skipped:
        log.info("conditional alignment skipped for classes %s", skipped)
    if len(mats) == 1 and problem.class_count > 0:
        warnings.warn(
            "no class is present in both domains; aligning marginals only",
            stacklevel=2,
        )
    return sum_mmd_matrices(mats)


def solve_mda_ad(
    problem: GlobalAdaptProblem, mmd_sum: MmdMatrix | None = None
) -> LayerWeights:
    """Closed-form solve of the distribution-adapting reconstruction objective.

    ``mmd_sum`` may carry a precomputed aggregate coefficient matrix (the
    stacked pipeline reuses one per pseudo-label snapshot); by default it
    is built from the problem's labels.
    """
    if mmd_sum is None:
        mmd_sum = aggregate_mmd(problem)
    stats = denoiser.expected_stats(
        problem.x, problem.noise, mmd_sum=mmd_sum, append_bias=problem.append_bias
    )
    return denoiser.solve_system(stats, problem.lam, problem.beta)


def encode_global(x: np.ndarray, w: LayerWeights) -> np.ndarray:
    """tanh encoding of clean data with a solved map."""
    return denoiser.encode(x, w)
