"""Closed-form marginalized denoising autoencoder.

Training data is corrupted by independent feature removal with probability
``p``; instead of sampling corruptions, the reconstruction objective is
averaged analytically, which reduces the fit to a ridge-type linear system
built from two expectation matrices. An explicit corruption sampler is kept
for Monte-Carlo cross-checks.

Conventions: rows are instances, the learned map ``w`` acts on the right
(``x @ w`` reconstructs ``x`` from its corrupted version), and encoding
applies ``tanh`` to the product of the *clean* input with ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystemError, ValidationError
from .mmd import MmdMatrix

# relative Frobenius residual every closed-form solve must reach
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class NoiseSpec:
    """Feature-removal probability plus the seed for the sampling oracle."""

    p: float
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValidationError(f"noise probability must be in [0, 1), got {self.p}")

    def derived(self, index: int) -> "NoiseSpec":
        """Independent spec for the ``index``-th Monte-Carlo draw."""
        seed = int(np.random.SeedSequence([self.rng_seed & (2**63 - 1), index]).generate_state(1)[0])
        return NoiseSpec(self.p, seed)


@dataclass
class ExpectationStats:
    """Expectation matrices of the corruption-averaged objective.

    ``q`` is E over corruptions of the corrupted Gram matrix, ``p_cross``
    the expected cross product between corrupted and clean data, and ``q2``
    (optional) the expected MMD-weighted Gram matrix.
    """

    q: np.ndarray
    p_cross: np.ndarray
    q2: np.ndarray | None = None


@dataclass
class LayerWeights:
    """One layer's linear reconstruction map.

    Square ``d x d`` unless a bias row was appended during the solve, in
    which case the shape is ``(d+1) x d`` and ``has_bias`` is set.
    ``residual`` records the relative residual of the linear solve.
    """

    w: np.ndarray
    has_bias: bool = False
    residual: float = float("nan")

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if not np.all(np.isfinite(self.w)):
            raise ValidationError("weights must be finite")
        expected_rows = self.w.shape[1] + (1 if self.has_bias else 0)
        if self.w.ndim != 2 or self.w.shape[0] != expected_rows:
            raise ValidationError(f"bad weight shape {self.w.shape} (has_bias={self.has_bias})")


def _with_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def _survival(d: int, p: float, append_bias: bool) -> np.ndarray:
    q = np.full(d + (1 if append_bias else 0), 1.0 - p)
    if append_bias:
        q[-1] = 1.0
    return q


def _scale_second_moment(u: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Apply survival scaling: q_i*q_j off the diagonal, q_i on it."""
    scaled = u * np.outer(q, q)
    np.fill_diagonal(scaled, q * np.diag(u))
    return scaled


def expected_stats(
    x: np.ndarray,
    noise: NoiseSpec,
    mmd_sum: MmdMatrix | None = None,
    append_bias: bool = False,
) -> ExpectationStats:
    """Expectation matrices for data ``x`` under feature-removal noise.

    With ``mmd_sum`` given (an instance-space coefficient matrix matching
    ``x``'s row count), ``q2`` carries the expected MMD-weighted Gram
    matrix used by the distribution-adapting solvers.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError(f"x must be a non-empty 2-D matrix, got shape {x.shape}")
    d = x.shape[1]
    xa = _with_bias(x) if append_bias else x
    qvec = _survival(d, noise.p, append_bias)
    u = xa.T @ xa
    q = _scale_second_moment(u, qvec)
    p_cross = (qvec[:, None] * u)[:, :d]
    q2 = None
    if mmd_sum is not None:
        if mmd_sum.size != x.shape[0]:
            raise ValidationError(
                f"mmd matrix size {mmd_sum.size} does not match {x.shape[0]} instances"
            )
        u2 = xa.T @ mmd_sum.coefficients @ xa
        u2 = 0.5 * (u2 + u2.T)  # two GEMMs round asymmetrically
        q2 = _scale_second_moment(u2, qvec)
    return ExpectationStats(q=q, p_cross=p_cross, q2=q2)


def corrupt_sample(x: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """One corrupted copy of ``x``: entries zeroed independently w.p. ``p``.

    Deterministic for a fixed ``noise.rng_seed``; use ``noise.derived(i)``
    for a stream of independent draws.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(noise.rng_seed)
    mask = rng.random(x.shape) >= noise.p
    return x * mask


def solve_system(stats: ExpectationStats, lam: float, beta: float = 0.0) -> LayerWeights:
    """Solve (q + lam*I + beta*q2) w = p_cross to RESIDUAL_TOL.

    The system matrix is symmetric positive semidefinite, so a Cholesky
    solve is tried first; one step of iterative refinement recovers the
    tolerance on ill-conditioned systems.
    """
    if lam < 0 or beta < 0:
        raise ValidationError("lam and beta must be nonnegative")
    a = stats.q + lam * np.eye(stats.q.shape[0])
    if beta != 0.0:
        if stats.q2 is None:
            raise ValidationError("beta > 0 requires q2")
        a = a + beta * stats.q2
    b = stats.p_cross

    def attempt(rhs):
        try:
            return scipy.linalg.solve(a, rhs, assume_a="pos")
        except np.linalg.LinAlgError:
            if lam == 0.0:
                raise SingularSystemError(
                    "expectation system is singular; solve with lam > 0"
                ) from None
            return scipy.linalg.solve(a, rhs, assume_a="sym")

    w = attempt(b)
    norm_b = np.linalg.norm(b)
    denom = max(norm_b, np.finfo(float).tiny)
    residual = np.linalg.norm(a @ w - b) / denom
    if residual > RESIDUAL_TOL:
        w = w + attempt(b - a @ w)
        residual = np.linalg.norm(a @ w - b) / denom
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"linear solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}; "
            "the system is numerically singular (increase lam)"
        )
    return LayerWeights(w, has_bias=stats.q.shape[0] != b.shape[1], residual=float(residual))


def solve_mda(
    x: np.ndarray, noise: NoiseSpec, lam: float, append_bias: bool = False
) -> LayerWeights:
    """Closed-form denoiser fit: minimizes the expected reconstruction loss
    plus ``lam`` times the squared Frobenius norm of the map."""
    stats = expected_stats(x, noise, append_bias=append_bias)
    return solve_system(stats, lam)


def encode(x: np.ndarray, w: LayerWeights) -> np.ndarray:
    """Elementwise tanh of ``x @ w`` on clean inputs; values lie in (-1, 1)."""
    x = np.asarray(x, dtype=np.float64)
    xa = _with_bias(x) if w.has_bias else x
    if xa.shape[1] != w.w.shape[0]:
        raise ValidationError(
            f"input has {x.shape[1]} features but weights expect "
            f"{w.w.shape[0] - (1 if w.has_bias else 0)}"
        )
    return np.tanh(xa @ w.w)


def expected_objective(
    stats: ExpectationStats,
    w: np.ndarray,
    lam: float,
    beta: float = 0.0,
    const: float = 0.0,
) -> float:
    """Corruption-averaged objective value at ``w``.

    ``const`` is the data-only term (squared Frobenius norm of the clean
    data); pass it when absolute values matter, e.g. comparing against the
    loss at w=0.
    """
    val = np.trace(w.T @ stats.q @ w) - 2.0 * np.trace(w.T @ stats.p_cross)
    val += lam * np.sum(w * w)
    if beta != 0.0:
        if stats.q2 is None:
            raise ValidationError("beta > 0 requires q2")
        val += beta * np.trace(w.T @ stats.q2 @ w)
    return float(val + const)


def expected_gradient(
    stats: ExpectationStats, w: np.ndarray, lam: float, beta: float = 0.0
) -> np.ndarray:
    """Gradient of :func:`expected_objective` with respect to ``w``."""
    grad = 2.0 * (stats.q @ w) - 2.0 * stats.p_cross + 2.0 * lam * w
    if beta != 0.0:
        if stats.q2 is None:
            raise ValidationError("beta > 0 requires q2")
        grad = grad + 2.0 * beta * (stats.q2 @ w)
    return grad
