"""Dense real symmetric-matrix kernels.

Eigendecomposition, operator norm, sample covariance/correlation, and the
structured population matrices used by the experiments. Matrices are plain
float64 numpy arrays; validation helpers enforce the symmetric-input
contract before anything reaches LAPACK.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ._serialize import write_matrix_csv, write_spectrum_csv

__all__ = [
    "as_sym_matrix",
    "sym_eigenvalues",
    "operator_norm",
    "sample_covariance",
    "sample_correlation",
    "corr_from_cov",
    "toeplitz_corr",
    "matrix_sqrt_psd",
    "load_matrix_csv",
    "save_matrix_csv",
    "load_spectrum_csv",
    "save_spectrum_csv",
]

# Inputs are symmetrized when the asymmetry is within this relative
# tolerance; anything larger is treated as caller error.
SYM_RTOL = 1e-12
# matrix_sqrt_psd clamps eigenvalues in [-PSD_TOL * ||M||_2, 0) to zero.
PSD_TOL = 1e-10


def _as_matrix(M, name: str = "matrix") -> NDArray[np.float64]:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} must have finite entries")
    return A


def as_sym_matrix(M, name: str = "matrix") -> NDArray[np.float64]:
    """Validate a symmetric matrix and return its exactly symmetric form.

    Asymmetry up to SYM_RTOL relative to the entry scale is removed by
    averaging with the transpose; larger asymmetry raises.
    """
    A = _as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return (A + A.T) / 2.0


def sym_eigenvalues(M) -> NDArray[np.float64]:
    """All eigenvalues of a symmetric matrix, sorted ascending."""
    A = as_sym_matrix(M)
    return np.linalg.eigvalsh(A)


def operator_norm(M) -> float:
    """Spectral norm of a symmetric matrix: max |eigenvalue|."""
    eigs = sym_eigenvalues(M)
    return float(np.max(np.abs(eigs)))


def _as_data_matrix(Y, min_rows: int = 1) -> NDArray[np.float64]:
    A = _as_matrix(Y, "data matrix")
    if A.shape[0] < min_rows:
        raise ValueError(f"data matrix needs at least {min_rows} rows, got {A.shape[0]}")
    return A


def sample_covariance(Y) -> NDArray[np.float64]:
    """Column-centered cross-product scaled by 1/(n-1)."""
    A = _as_data_matrix(Y, min_rows=2)
    centered = A - A.mean(axis=0)
    S = centered.T @ centered / (A.shape[0] - 1)
    return (S + S.T) / 2.0


def _degenerate_columns(Y: NDArray[np.float64], variances: NDArray[np.float64]) -> NDArray[np.bool_]:
    # A constant column can leave O(eps)-sized centering residue, so compare
    # the variance against the squared rounding scale of the column.
    col_scale = np.maximum(1.0, np.max(np.abs(Y), axis=0))
    return variances <= (1e-12 * col_scale) ** 2


def sample_correlation(Y) -> NDArray[np.float64]:
    """Sample correlation matrix; unit diagonal exactly, entries in [-1, 1]."""
    A = _as_data_matrix(Y, min_rows=2)
    S = sample_covariance(A)
    d = np.diag(S).copy()
    if np.any(_degenerate_columns(A, d)):
        bad = np.nonzero(_degenerate_columns(A, d))[0]
        raise ValueError(f"degenerate column (zero variance) at index {bad[0]}")
    root = np.sqrt(d)
    C = S / np.outer(root, root)
    C = np.clip((C + C.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(C, 1.0)
    return C


def corr_from_cov(S) -> NDArray[np.float64]:
    """Correlation matrix of a covariance matrix: D^{-1/2} S D^{-1/2}."""
    A = as_sym_matrix(S, "covariance matrix")
    d = np.diag(A).copy()
    if np.any(d <= 0):
        raise ValueError("covariance matrix has a nonpositive diagonal entry")
    root = np.sqrt(d)
    C = A / np.outer(root, root)
    C = np.clip((C + C.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(C, 1.0)
    return C


def toeplitz_corr(p: int, r: float) -> NDArray[np.float64]:
    """Correlation matrix with entries r^|i-j| (positive definite for |r| < 1)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    r = float(r)
    if not np.isfinite(r) or abs(r) >= 1:
        raise ValueError("r must satisfy |r| < 1")
    from scipy.linalg import toeplitz

    return toeplitz(r ** np.arange(p))


def matrix_sqrt_psd(M) -> NDArray[np.float64]:
    """Symmetric PSD square root; eigenvalues in [-1e-10*||M||, 0) are clamped."""
    A = as_sym_matrix(M)
    eigvals, eigvecs = np.linalg.eigh(A)
    scale = float(np.max(np.abs(eigvals))) if eigvals.size else 0.0
    if eigvals.size and eigvals[0] < -PSD_TOL * max(scale, 1e-300):
        raise ValueError(f"not PSD: smallest eigenvalue {eigvals[0]:.3e} below tolerance")
    eigvals = np.clip(eigvals, 0.0, None)
    Q = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (Q + Q.T) / 2.0


def load_matrix_csv(path) -> NDArray[np.float64]:
    M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    return _as_matrix(M)


def save_matrix_csv(path, M) -> None:
    write_matrix_csv(path, _as_matrix(M))


def load_spectrum_csv(path) -> NDArray[np.float64]:
    eigs = np.loadtxt(path, ndmin=1, dtype=np.float64)
    if eigs.ndim != 1:
        raise ValueError("spectrum CSV must contain one eigenvalue per line")
    if not np.all(np.isfinite(eigs)):
        raise ValueError("spectrum must be finite")
    if np.any(np.diff(eigs) < 0):
        raise ValueError("spectrum must be sorted ascending")
    return eigs


def save_spectrum_csv(path, eigs) -> None:
    write_spectrum_csv(path, eigs)
