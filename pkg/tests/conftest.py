"""Shared fixtures and oracle helpers."""

import numpy as np
import pytest

from ssrlda.dataio import LabeledMatrix, make_domain_pair
from ssrlda.denoiser import corrupt_sample


def shifted_gaussian_pair(seed=7, n_per_class=100, dim=20, signal=1.2, shift=1.5):
    """Two 2-class Gaussian domains whose class means differ by ``shift`` sigma.

    The source carries extra class signal of magnitude ``shift`` on axis 1
    that the target lacks, so each class mean moves exactly ``shift``
    (sigma = 1) between domains and a source-trained classifier leans on a
    direction that does not transfer.

    Returns (pair, target_truth).
    """
    rng = np.random.default_rng(seed)
    mu0_src = np.zeros(dim)
    mu0_src[0] = signal
    mu0_src[1] = shift
    mu0_tgt = np.zeros(dim)
    mu0_tgt[0] = signal
    xs = np.vstack(
        [
            rng.normal(mu0_src, 1.0, (n_per_class, dim)),
            rng.normal(-mu0_src, 1.0, (n_per_class, dim)),
        ]
    )
    ys = np.array([0] * n_per_class + [1] * n_per_class)
    xt = np.vstack(
        [
            rng.normal(mu0_tgt, 1.0, (n_per_class, dim)),
            rng.normal(-mu0_tgt, 1.0, (n_per_class, dim)),
        ]
    )
    yt = np.array([0] * n_per_class + [1] * n_per_class)
    pair = make_domain_pair(LabeledMatrix(xs, ys), LabeledMatrix(xt, yt), 2)
    return pair, yt


def monte_carlo_moments(x, noise, k):
    """Sample averages of corrupted Gram and cross matrices over k draws."""
    x = np.asarray(x, dtype=np.float64)
    q_sum = np.zeros((x.shape[1], x.shape[1]))
    p_sum = np.zeros((x.shape[1], x.shape[1]))
    for i in range(k):
        xt = corrupt_sample(x, noise.derived(i))
        q_sum += xt.T @ xt
        p_sum += xt.T @ x
    return q_sum / k, p_sum / k


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
