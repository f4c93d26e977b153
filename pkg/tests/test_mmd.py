import numpy as np
import pytest

from ssrlda.dataio import load_sparse
from ssrlda.errors import ValidationError
from ssrlda.mmd import (
    AGGREGATE,
    build_conditional_mmd,
    build_marginal_mmd,
    dump_csv,
    mmd_squared_linear,
    sum_mmd_matrices,
)


class TestMarginal:
    def test_unit_counts(self):
        m = build_marginal_mmd(1, 1)
        assert m.coefficients.tolist() == [[1, -1], [-1, 1]]
        assert m.class_index == 0

    def test_two_by_two_blocks(self):
        m = build_marginal_mmd(2, 2).coefficients
        assert np.array_equal(m[:2, :2], np.full((2, 2), 0.25))
        assert np.array_equal(m[2:, 2:], np.full((2, 2), 0.25))
        assert np.array_equal(m[:2, 2:], np.full((2, 2), -0.25))
        assert np.allclose(m.sum(axis=1), 0.0, atol=1e-14)

    def test_zero_size_domain(self):
        with pytest.raises(ValidationError):
            build_marginal_mmd(0, 3)
        with pytest.raises(ValidationError):
            build_marginal_mmd(3, 0)

    def test_quadratic_form_is_mean_difference(self, rng):
        n_s, n_t = 5, 8
        m = build_marginal_mmd(n_s, n_t).coefficients
        x = rng.normal(size=n_s + n_t)
        expected = (x[:n_s].mean() - x[n_s:].mean()) ** 2
        assert abs(x @ m @ x - expected) < 1e-12

    def test_block_scaling_invariance(self):
        small = build_marginal_mmd(2, 3).coefficients
        big = build_marginal_mmd(8, 12).coefficients  # counts scaled by k=4
        assert big[0, 0] * 16 == pytest.approx(small[0, 0], abs=1e-15)
        assert big[-1, -1] * 16 == pytest.approx(small[-1, -1], abs=1e-15)
        assert big[0, -1] * 16 == pytest.approx(small[0, -1], abs=1e-15)

    def test_immutable(self):
        m = build_marginal_mmd(2, 2)
        with pytest.raises(ValueError):
            m.coefficients[0, 0] = 5.0


class TestConditional:
    def test_single_instances(self):
        m = build_conditional_mmd([0], [0], 0, 1)
        assert m.coefficients.tolist() == [[1, -1], [-1, 1]]
        assert m.class_index == 1
        assert not m.skipped

    def test_embedded_rows(self):
        # hand evaluation: class 1 occupies rows 1 (source) and 3 (target)
        m = build_conditional_mmd([0, 1], [0, 1], 1, 2).coefficients
        expected = np.zeros((4, 4))
        expected[1, 1] = expected[3, 3] = 1.0
        expected[1, 3] = expected[3, 1] = -1.0
        assert np.array_equal(m, expected)

    def test_skip_when_one_side_empty(self):
        m = build_conditional_mmd([0, 1], [0, 0], 1, 2)
        assert m.skipped
        assert not m.coefficients.any()

    def test_error_when_both_sides_empty(self):
        with pytest.raises(ValidationError, match="both"):
            build_conditional_mmd([0, 0], [0, 0], 1, 2)

    def test_counts_normalize_entries(self):
        m = build_conditional_mmd([0, 0, 1], [0, 0, 0, 1], 0, 2).coefficients
        assert m[0, 0] == pytest.approx(1 / 4)
        assert m[3, 3] == pytest.approx(1 / 9)
        assert m[0, 3] == pytest.approx(-1 / 6)
        assert np.allclose(m.sum(axis=1), 0, atol=1e-14)

    def test_label_validation(self):
        with pytest.raises(ValidationError):
            build_conditional_mmd([0, 5], [0], 0, 2)
        with pytest.raises(ValidationError):
            build_conditional_mmd([0], [0], 3, 2)


class TestSum:
    def test_single_matrix_identity(self):
        m0 = build_marginal_mmd(2, 2)
        total = sum_mmd_matrices([m0])
        assert np.array_equal(total.coefficients, m0.coefficients)
        assert total.class_index == AGGREGATE

    def test_cancellation(self):
        m0 = build_marginal_mmd(2, 2)
        neg = type(m0)(-m0.coefficients, class_index=0)
        assert not sum_mmd_matrices([m0, neg]).coefficients.any()

    def test_matches_entrywise_addition(self):
        src, tgt = [0, 1], [1, 0]
        mats = [build_marginal_mmd(2, 2)]
        mats += [build_conditional_mmd(src, tgt, c, 2) for c in range(2)]
        total = sum_mmd_matrices(mats).coefficients
        expected = mats[0].coefficients + mats[1].coefficients + mats[2].coefficients
        assert np.array_equal(total, expected)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            sum_mmd_matrices([build_marginal_mmd(1, 1), build_marginal_mmd(2, 2)])

    def test_empty_list(self):
        with pytest.raises(ValidationError):
            sum_mmd_matrices([])


class TestMmdSquaredLinear:
    def test_identical_sets(self, rng):
        a = rng.normal(size=(6, 4))
        assert mmd_squared_linear(a, a) == 0.0

    def test_unit_vectors(self):
        assert mmd_squared_linear(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == 2.0

    def test_empty_input(self):
        with pytest.raises(ValidationError):
            mmd_squared_linear(np.zeros((0, 2)), np.zeros((3, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            mmd_squared_linear(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_trace_form_equals_direct_value(self, rng):
        a = rng.normal(size=(4, 3))
        b = rng.normal(size=(6, 3))
        stacked = np.vstack([a, b])
        m = build_marginal_mmd(4, 6).coefficients
        trace_form = np.trace(stacked.T @ m @ stacked)
        assert abs(trace_form - mmd_squared_linear(a, b)) < 1e-12


class TestStructuralInvariants:
    def test_trace_form_matches_mean_difference_norm(self, rng):
        # mapped data: tr(W'X'MXW) equals the squared norm of the
        # mean-row difference of the mapped blocks
        for _ in range(20):
            n_s = int(rng.integers(2, 10))
            n_t = int(rng.integers(2, 10))
            d = int(rng.integers(2, 6))
            x = rng.normal(size=(n_s + n_t, d)) * (1 - 0.3)
            w = rng.normal(size=(d, d))
            m = build_marginal_mmd(n_s, n_t).coefficients
            mapped = x @ w
            diff = mapped[:n_s].mean(axis=0) - mapped[n_s:].mean(axis=0)
            assert abs(np.trace(w.T @ x.T @ m @ x @ w) - diff @ diff) < 1e-10

    def test_matrices_are_psd(self, rng):
        labels_s = rng.integers(0, 3, size=9)
        labels_t = rng.integers(0, 3, size=7)
        mats = [build_marginal_mmd(9, 7)]
        for c in range(3):
            if np.any(labels_s == c) and np.any(labels_t == c):
                mats.append(build_conditional_mmd(labels_s, labels_t, c, 3))
        for m in mats:
            for _ in range(25):
                v = rng.normal(size=m.size)
                assert v @ m.coefficients @ v >= -1e-12

    def test_rows_sum_to_zero(self, rng):
        labels_s = np.array([0, 0, 1, 1, 2])
        labels_t = np.array([0, 1, 1, 2, 2, 2])
        mats = [build_marginal_mmd(5, 6)]
        mats += [build_conditional_mmd(labels_s, labels_t, c, 3) for c in range(3)]
        total = sum_mmd_matrices(mats)
        for m in mats + [total]:
            assert np.abs(m.coefficients.sum(axis=1)).max() <= 1e-14
            assert np.array_equal(m.coefficients, m.coefficients.T)


def test_dump_csv_reloads_via_dataio(tmp_path, rng):
    m = build_marginal_mmd(3, 4)
    path = tmp_path / "mmd.csv"
    dump_csv(m, path)
    back = load_sparse(path, "csv")
    assert np.allclose(back.values, m.coefficients, atol=0, rtol=1e-15)
