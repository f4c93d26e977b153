import numpy as np
import pytest

from conftest import monte_carlo_moments
from ssrlda.denoiser import (
    NoiseSpec,
    corrupt_sample,
    encode,
    expected_gradient,
    expected_objective,
    expected_stats,
    solve_mda,
    solve_system,
)
from ssrlda.errors import SingularSystemError, ValidationError
from ssrlda.mmd import build_marginal_mmd


def finite_difference_gradient(objective, w, h=1e-6):
    grad = np.zeros_like(w)
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            up = w.copy()
            up[i, j] += h
            down = w.copy()
            down[i, j] -= h
            grad[i, j] = (objective(up) - objective(down)) / (2 * h)
    return grad


class TestNoiseSpec:
    def test_probability_range(self):
        NoiseSpec(0.0)
        NoiseSpec(0.999)
        with pytest.raises(ValidationError):
            NoiseSpec(1.0)
        with pytest.raises(ValidationError):
            NoiseSpec(-0.1)

    def test_derived_specs_differ(self):
        spec = NoiseSpec(0.5, 7)
        assert spec.derived(0).rng_seed != spec.derived(1).rng_seed
        assert spec.derived(3) == spec.derived(3)


class TestExpectedStats:
    def test_zero_noise_identity(self, rng):
        x = rng.normal(size=(6, 4))
        u = x.T @ x
        stats = expected_stats(x, NoiseSpec(0.0))
        assert np.array_equal(stats.q, u)
        assert np.array_equal(stats.p_cross, u)

    def test_identity_input_half_noise(self):
        stats = expected_stats(np.eye(2), NoiseSpec(0.5))
        assert np.array_equal(stats.q, np.diag([0.5, 0.5]))
        assert np.array_equal(stats.p_cross, 0.5 * np.eye(2))

    def test_symmetry_and_diagonal_scaling(self, rng):
        x = rng.normal(size=(9, 5))
        p = 0.3
        stats = expected_stats(x, NoiseSpec(p))
        u = x.T @ x
        assert np.array_equal(stats.q, stats.q.T)
        assert np.allclose(np.diag(stats.q), (1 - p) * np.diag(u), atol=0)
        off = ~np.eye(5, dtype=bool)
        assert np.allclose(stats.q[off], ((1 - p) ** 2 * u)[off], atol=0)

    def test_monte_carlo_agreement(self):
        # sampling oracle: averaged corrupted moments converge to the
        # analytic expectations
        rng = np.random.default_rng(2024)
        x = rng.normal(size=(20, 8))
        noise = NoiseSpec(0.5, rng_seed=99)
        stats = expected_stats(x, noise)
        q_hat, p_hat = monte_carlo_moments(x, noise, 200_000)
        q_err = np.linalg.norm(q_hat - stats.q) / np.linalg.norm(stats.q)
        p_err = np.linalg.norm(p_hat - stats.p_cross) / np.linalg.norm(stats.p_cross)
        assert q_err <= 2e-2
        assert p_err <= 2e-2

    def test_entries_monotone_in_p_for_nonnegative_data(self, rng):
        x = np.abs(rng.normal(size=(7, 4)))
        grid = [0.0, 0.2, 0.4, 0.6, 0.8]
        stats = [expected_stats(x, NoiseSpec(p)).q for p in grid]
        for lo, hi in zip(stats, stats[1:]):
            assert np.all(hi <= lo + 1e-12)

    def test_mmd_weighted_moment(self, rng):
        x = rng.normal(size=(6, 3))
        m = build_marginal_mmd(2, 4)
        p = 0.4
        stats = expected_stats(x, NoiseSpec(p), mmd_sum=m)
        u2 = x.T @ m.coefficients @ x
        assert np.allclose(np.diag(stats.q2), (1 - p) * np.diag(u2), atol=0)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(stats.q2[off], ((1 - p) ** 2 * u2)[off], atol=0)

    def test_mmd_size_mismatch(self, rng):
        with pytest.raises(ValidationError):
            expected_stats(rng.normal(size=(5, 3)), NoiseSpec(0.1), mmd_sum=build_marginal_mmd(2, 2))

    def test_empty_input(self):
        with pytest.raises(ValidationError):
            expected_stats(np.zeros((0, 3)), NoiseSpec(0.1))


class TestCorruptSample:
    def test_zero_noise_is_identity(self, rng):
        x = rng.normal(size=(5, 5))
        assert np.array_equal(corrupt_sample(x, NoiseSpec(0.0, 1)), x)

    def test_deterministic_per_seed(self, rng):
        x = rng.normal(size=(8, 6))
        spec = NoiseSpec(0.7, 123)
        assert np.array_equal(corrupt_sample(x, spec), corrupt_sample(x, spec))

    def test_derived_draws_differ(self, rng):
        x = rng.normal(size=(8, 6))
        spec = NoiseSpec(0.7, 123)
        assert not np.array_equal(
            corrupt_sample(x, spec.derived(0)), corrupt_sample(x, spec.derived(1))
        )

    def test_surviving_mass_matches_binomial_expectation(self):
        rng = np.random.default_rng(5)
        x = np.abs(rng.normal(size=(4, 5))) + 0.1
        p = 0.97
        spec = NoiseSpec(p, 31)
        k = 100_000
        masses = np.empty(k)
        for i in range(k):
            masses[i] = corrupt_sample(x, spec.derived(i)).sum()
        expected = (1 - p) * x.sum()
        # entries are zeroed independently, so the per-sample mass variance
        # is sum_ij p(1-p) x_ij^2
        stderr = np.sqrt(p * (1 - p) * np.sum(x**2) / k)
        assert abs(masses.mean() - expected) <= 3 * stderr


class TestSolveMda:
    def test_no_noise_full_rank_gives_identity(self, rng):
        x = rng.normal(size=(12, 4))
        w = solve_mda(x, NoiseSpec(0.0), lam=0.0)
        assert np.linalg.norm(w.w - np.eye(4)) <= 1e-8

    def test_huge_regularizer_shrinks_weights(self, rng):
        x = rng.normal(size=(10, 3))
        noise = NoiseSpec(0.4)
        stats = expected_stats(x, noise)
        w = solve_mda(x, noise, lam=1e12)
        assert np.linalg.norm(w.w) <= 1e-6 * np.linalg.norm(stats.p_cross)

    def test_singular_without_regularizer(self):
        x = np.zeros((4, 3))
        x[:, 0] = [1.0, 2.0, 3.0, 4.0]  # columns 1 and 2 stay all-zero
        with pytest.raises(SingularSystemError, match="lam"):
            solve_mda(x, NoiseSpec(0.3), lam=0.0)

    def test_monte_carlo_ridge_agreement(self):
        # oracle: ridge fit on explicitly sampled corruptions
        rng = np.random.default_rng(77)
        x = rng.normal(size=(20, 8))
        noise = NoiseSpec(0.5, rng_seed=4)
        lam = 1.0
        w_closed = solve_mda(x, noise, lam=lam).w
        q_hat, p_hat = monte_carlo_moments(x, noise, 30_000)
        w_mc = np.linalg.solve(q_hat + lam * np.eye(8), p_hat)
        rel = np.linalg.norm(w_closed - w_mc) / np.linalg.norm(w_mc)
        assert rel <= 4e-2

    def test_row_order_invariance(self, rng):
        x = rng.normal(size=(9, 4))
        noise = NoiseSpec(0.35)
        w1 = solve_mda(x, noise, lam=0.5).w
        w2 = solve_mda(x[rng.permutation(9)], noise, lam=0.5).w
        assert np.abs(w1 - w2).max() <= 1e-12

    def test_gradient_zero_at_solution(self, rng):
        x = rng.normal(size=(10, 4))
        noise = NoiseSpec(0.6)
        lam = 0.7
        stats = expected_stats(x, noise)
        w = solve_mda(x, noise, lam=lam)
        grad = expected_gradient(stats, w.w, lam)
        assert np.linalg.norm(grad) <= 1e-8 * np.linalg.norm(stats.p_cross)

    def test_finite_differences_match_gradient(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(10, 4))
        stats = expected_stats(x, NoiseSpec(0.5))
        lam = 0.3
        w = rng.normal(size=(4, 4))
        analytic = expected_gradient(stats, w, lam)
        fd = finite_difference_gradient(
            lambda v: expected_objective(stats, v, lam, const=float(np.sum(x * x))), w
        )
        assert np.linalg.norm(fd - analytic) / np.linalg.norm(analytic) <= 1e-4

    def test_residual_recorded(self, rng):
        w = solve_mda(rng.normal(size=(8, 3)), NoiseSpec(0.2), lam=0.1)
        assert w.residual <= 1e-8


class TestEncode:
    def test_zero_weights(self, rng):
        from ssrlda.denoiser import LayerWeights

        x = rng.normal(size=(5, 3))
        assert not encode(x, LayerWeights(np.zeros((3, 3)))).any()

    def test_identity_mapping(self):
        from ssrlda.denoiser import LayerWeights

        out = encode(np.array([[1.0, 0.0]]), LayerWeights(np.eye(2)))
        assert out[0, 0] == pytest.approx(np.tanh(1.0))
        assert out[0, 1] == 0.0

    def test_scaling_never_decreases_magnitude(self, rng):
        from ssrlda.denoiser import LayerWeights

        x = rng.normal(size=(6, 4))
        w = LayerWeights(rng.normal(size=(4, 4)))
        assert np.all(np.abs(encode(2 * x, w)) >= np.abs(encode(x, w)) - 1e-15)

    def test_output_range(self, rng):
        from ssrlda.denoiser import LayerWeights

        out = encode(rng.normal(size=(5, 3)) * 3, LayerWeights(rng.normal(size=(3, 3))))
        assert np.all(out > -1) and np.all(out < 1)

    def test_dimension_mismatch(self, rng):
        from ssrlda.denoiser import LayerWeights

        with pytest.raises(ValidationError):
            encode(rng.normal(size=(5, 3)), LayerWeights(np.eye(4)))


class TestBiasMode:
    def test_shapes_and_residual(self, rng):
        x = rng.normal(size=(10, 4))
        w = solve_mda(x, NoiseSpec(0.3), lam=0.5, append_bias=True)
        assert w.has_bias
        assert w.w.shape == (5, 4)
        assert encode(x, w).shape == (10, 4)
        assert w.residual <= 1e-8

    def test_bias_improves_reconstruction_of_offset_data(self, rng):
        # data with a large common offset is easier to reconstruct when a
        # constant column is available to the denoiser
        x = rng.normal(size=(30, 3)) + 5.0
        noise = NoiseSpec(0.5)

        def reconstruction_error(append_bias):
            # expected corrupted input: features scaled by survival, bias kept
            w = solve_mda(x, noise, lam=1e-8, append_bias=append_bias)
            scaled = (1 - noise.p) * x
            xa = np.hstack([scaled, np.ones((30, 1))]) if append_bias else scaled
            return np.linalg.norm(x - xa @ w.w)

        assert reconstruction_error(True) < reconstruction_error(False)


def test_solve_system_requires_q2_when_beta_positive(rng):
    stats = expected_stats(rng.normal(size=(5, 3)), NoiseSpec(0.1))
    with pytest.raises(ValidationError):
        solve_system(stats, lam=0.1, beta=1.0)
