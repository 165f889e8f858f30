"""Dense symmetric kernels against independent oracles and matrix identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmtlaw.linalg import (
    as_sym_matrix,
    corr_from_cov,
    load_matrix_csv,
    load_spectrum_csv,
    matrix_sqrt_psd,
    operator_norm,
    sample_correlation,
    sample_covariance,
    save_matrix_csv,
    save_spectrum_csv,
    sym_eigenvalues,
    toeplitz_corr,
)


def char_poly_coefficients(A):
    """Characteristic polynomial by the Faddeev-LeVerrier recursion."""
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(A @ M) / k)
    return np.array(coeffs)


class TestSymEigenvalues:
    def test_hand_2x2(self):
        eigs = sym_eigenvalues(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(eigs, [1.0, 3.0])

    def test_char_poly_oracle_6x6(self):
        rng = np.random.Generator(np.random.Philox(12345))
        B = rng.normal(size=(6, 6))
        A = (B + B.T) / 2
        roots = np.sort(np.roots(char_poly_coefficients(A)).real)
        assert np.allclose(sym_eigenvalues(A), roots, atol=1e-8)

    def test_constructed_spectrum(self):
        # Q diag(lams) Q' has exactly lams as its spectrum.
        rng = np.random.Generator(np.random.Philox(7))
        Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        lams = np.array([-2.0, -0.5, 0.0, 1.5, 4.0])
        A = Q @ np.diag(lams) @ Q.T
        assert np.allclose(sym_eigenvalues(A), lams, atol=1e-12)

    def test_ascending_order(self):
        eigs = sym_eigenvalues(np.diag([3.0, -1.0, 2.0]))
        assert np.all(np.diff(eigs) >= 0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            sym_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestOperatorNorm:
    def test_diagonal(self):
        assert operator_norm(np.diag([-3.0, 2.0])) == pytest.approx(3.0)

    def test_identity(self):
        assert operator_norm(np.eye(4)) == pytest.approx(1.0)


class TestSampleCovariance:
    def test_two_pass_oracle(self):
        rng = np.random.Generator(np.random.Philox(3))
        Y = rng.normal(size=(7, 3))
        S = sample_covariance(Y)
        n = Y.shape[0]
        mean = Y.mean(axis=0)
        expected = np.zeros((3, 3))
        for i in range(n):
            d = Y[i] - mean
            expected += np.outer(d, d)
        expected /= n - 1
        assert np.allclose(S, expected, atol=1e-12)

    def test_constant_columns_zero(self):
        Y = np.ones((5, 2))
        assert np.allclose(sample_covariance(Y), 0.0)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            sample_covariance(np.ones((1, 3)))


class TestSampleCorrelation:
    def test_unit_diagonal(self):
        rng = np.random.Generator(np.random.Philox(5))
        Y = rng.normal(size=(20, 4))
        C = sample_correlation(Y)
        assert np.allclose(np.diag(C), 1.0)
        assert np.all(np.abs(C) <= 1.0)

    def test_perfect_correlation(self):
        x = np.arange(10.0)
        Y = np.column_stack([x, 2 * x + 1])
        C = sample_correlation(Y)
        assert C[0, 1] == pytest.approx(1.0)

    def test_anticorrelation(self):
        x = np.arange(10.0)
        Y = np.column_stack([x, -x])
        assert sample_correlation(Y)[0, 1] == pytest.approx(-1.0)

    def test_degenerate_column(self):
        Y = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        with pytest.raises(ValueError, match="degenerate column.*index 1"):
            sample_correlation(Y)

    def test_scale_invariance(self):
        rng = np.random.Generator(np.random.Philox(11))
        Y = rng.normal(size=(30, 5))
        D = np.array([0.1, 2.0, 5.0, 0.7, 1.3])
        C1 = sample_correlation(Y)
        C2 = sample_correlation(Y * D)
        assert np.allclose(sym_eigenvalues(C1), sym_eigenvalues(C2), atol=1e-10)


class TestCorrFromCov:
    def test_hand_values(self):
        S = np.array([[4.0, 2.0], [2.0, 9.0]])
        G = corr_from_cov(S)
        assert np.allclose(np.diag(G), 1.0)
        assert G[0, 1] == pytest.approx(2.0 / 6.0)

    def test_nonpositive_diagonal(self):
        with pytest.raises(ValueError):
            corr_from_cov(np.array([[0.0, 0.0], [0.0, 1.0]]))


class TestToeplitzCorr:
    def test_entries(self):
        G = toeplitz_corr(4, 0.5)
        i, j = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
        assert np.allclose(G, 0.5 ** np.abs(i - j))

    def test_identity_at_zero(self):
        assert np.array_equal(toeplitz_corr(3, 0.0), np.eye(3))

    def test_r_range(self):
        with pytest.raises(ValueError):
            toeplitz_corr(3, 1.0)

    def test_p_positive(self):
        with pytest.raises(ValueError):
            toeplitz_corr(0, 0.5)


class TestMatrixSqrtPsd:
    def test_square_recovers(self):
        rng = np.random.Generator(np.random.Philox(9))
        B = rng.normal(size=(5, 5))
        A = B @ B.T
        R = matrix_sqrt_psd(A)
        assert np.allclose(R @ R, A, atol=1e-10)
        assert np.allclose(R, R.T)

    def test_diagonal(self):
        R = matrix_sqrt_psd(np.diag([4.0, 9.0]))
        assert np.allclose(R, np.diag([2.0, 3.0]))

    def test_not_psd(self):
        with pytest.raises(ValueError, match="not PSD"):
            matrix_sqrt_psd(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_tiny_negative_clamped(self):
        A = np.diag([1.0, -1e-14])
        R = matrix_sqrt_psd(A)
        assert R[1, 1] == 0.0


class TestAsSymMatrix:
    def test_averages_rounding(self):
        A = np.array([[1.0, 2.0 + 1e-14], [2.0, 3.0]])
        S = as_sym_matrix(A)
        assert S[0, 1] == S[1, 0]

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            as_sym_matrix(np.array([[1.0, 2.0], [0.0, 3.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            as_sym_matrix(np.ones((2, 3)))


class TestCsvRoundTrips:
    def test_matrix(self, tmp_path):
        M = np.array([[1.5, -2.0], [0.25, 1e-9]])
        path = tmp_path / "m.csv"
        save_matrix_csv(path, M)
        assert np.array_equal(load_matrix_csv(path), M)

    def test_spectrum(self, tmp_path):
        eigs = np.array([-1.0, 0.0, 2.5])
        path = tmp_path / "e.csv"
        save_spectrum_csv(path, eigs)
        assert np.array_equal(load_spectrum_csv(path), eigs)

    def test_spectrum_must_ascend(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2.0\n1.0\n")
        with pytest.raises(ValueError):
            load_spectrum_csv(path)


def _sym_strategy(n, scale=5.0):
    return arrays(
        np.float64,
        (n, n),
        elements=st.floats(min_value=-scale, max_value=scale, allow_nan=False),
    ).map(lambda B: (B + B.T) / 2)


@given(_sym_strategy(4), _sym_strategy(4, scale=0.5))
@settings(max_examples=60, deadline=None)
def test_weyl_perturbation(A, E):
    # |lam_i(A+E) - lam_i(A)| <= ||E||_2 for every i
    gap = np.max(np.abs(sym_eigenvalues(A + E) - sym_eigenvalues(A)))
    assert gap <= operator_norm(E) + 1e-9


@given(_sym_strategy(4))
@settings(max_examples=60, deadline=None)
def test_norm_is_max_abs_eigenvalue(A):
    eigs = sym_eigenvalues(A)
    assert operator_norm(A) == pytest.approx(np.max(np.abs(eigs)), abs=1e-12)


@given(
    _sym_strategy(5),
    arrays(
        np.float64,
        (5,),
        elements=st.floats(min_value=-3, max_value=3, allow_nan=False),
    ),
)
@settings(max_examples=60, deadline=None)
def test_rank_one_update_ecdf(A, v):
    # A rank-one update moves the spectral ECDF by at most 1/p in sup norm.
    p = A.shape[0]
    e1 = sym_eigenvalues(A)
    e2 = sym_eigenvalues(A + np.outer(v, v))
    grid = np.concatenate([e1, e2])
    # Tolerance band absorbs eigvalsh rounding at coincident eigenvalues.
    eps = 1e-8 * (1.0 + np.max(np.abs(grid)))
    lo1 = np.searchsorted(e1, grid, side="right") / p
    hi1 = np.searchsorted(e1, grid + eps, side="right") / p
    lo2 = np.searchsorted(e2, grid, side="right") / p
    hi2 = np.searchsorted(e2, grid + eps, side="right") / p
    assert np.max(lo1 - hi2) <= 1.0 / p + 1e-12
    assert np.max(lo2 - hi1) <= 1.0 / p + 1e-12


@given(_sym_strategy(4))
@settings(max_examples=40, deadline=None)
def test_orthogonal_invariance(A):
    rng = np.random.Generator(np.random.Philox(42))
    Q, _ = np.linalg.qr(rng.normal(size=A.shape))
    assert np.allclose(
        sym_eigenvalues(Q @ A @ Q.T), sym_eigenvalues(A), atol=1e-8
    )
