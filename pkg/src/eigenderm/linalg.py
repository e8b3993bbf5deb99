"""Deterministic dense linear algebra for the detectors.

Vectors and matrices are plain float64 numpy arrays (matrices shaped
``(rows, cols)``); :func:`as_vector` / :func:`as_matrix` validate shape and
finiteness at the boundary. Every reduction runs in a fixed order — numpy's
pairwise summation for 1-D sums, an explicit binary tree over columns for
means, and BLAS products whose accumulation order does not depend on thread
count — so identical inputs give bit-identical results no matter how many
workers or BLAS threads are active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError, NumericalFailureError

__all__ = [
    "SymmetricEigenResult",
    "ThinSvdResult",
    "as_matrix",
    "as_vector",
    "euclidean_distance",
    "mean_vector",
    "project",
    "symmetric_eigen_descending",
    "thin_svd_snapshot",
]


def as_vector(values) -> np.ndarray:
    """Validate and return ``values`` as a finite 1-D float64 array."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError(f"expected a non-empty 1-D vector, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidInputError("vector contains NaN or Inf entries")
    return x


def as_matrix(values) -> np.ndarray:
    """Validate and return ``values`` as a finite 2-D float64 array."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidInputError("matrix contains NaN or Inf entries")
    return a


@dataclass(frozen=True)
class SymmetricEigenResult:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``eigenvectors`` holds one orthonormal eigenvector per column, each with
    its largest-magnitude entry made nonnegative (ties broken by lowest
    index) so repeated runs produce identical matrices.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class ThinSvdResult:
    """Thin SVD of a tall matrix: ``u`` is (rows, rank), values descending.

    Only singular values above the numerical-rank cutoff are kept; the right
    singular vectors are recoverable as ``X.T @ u[:, i] / s[i]``.
    """

    u: np.ndarray
    singular_values: np.ndarray
    rank: int


def _pairwise_column_sum(x: np.ndarray, lo: int, hi: int) -> np.ndarray:
    # Fixed binary tree over the column range: independent of thread count.
    if hi - lo == 1:
        return x[:, lo].copy()
    mid = (lo + hi) // 2
    return _pairwise_column_sum(x, lo, mid) + _pairwise_column_sum(x, mid, hi)


def mean_vector(x) -> np.ndarray:
    """Column mean of a (rows, n) matrix, accumulated in a fixed pairwise tree."""
    a = as_matrix(x)
    return _pairwise_column_sum(a, 0, a.shape[1]) / a.shape[1]


def euclidean_distance(x, y) -> float:
    """Euclidean distance between two equal-length vectors."""
    xv = as_vector(x)
    yv = as_vector(y)
    if xv.shape != yv.shape:
        raise DimensionMismatchError(f"vector dims differ: {xv.size} vs {yv.size}")
    d = xv - yv
    # np.sum is pairwise and single-threaded: deterministic.
    return float(np.sqrt(np.sum(d * d)))


def _offdiag_frobenius(a: np.ndarray) -> float:
    # Summed from the off-diagonal entries themselves; the subtraction form
    # sqrt(||A||_F^2 - ||diag||^2) cancels catastrophically near convergence.
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.sqrt(np.sum(off * off)))


def symmetric_eigen_descending(
    a, tol: float = 1e-12, max_sweeps: int = 100
) -> SymmetricEigenResult:
    """Eigendecompose a symmetric matrix with cyclic Jacobi rotations.

    Sweeps row-cyclically over all (p, q) pairs until the off-diagonal
    Frobenius mass drops to ``tol`` times the Frobenius norm of the input.

    Raises:
        InvalidInputError: matrix not square or not symmetric to 1e-10 relative.
        NumericalFailureError: no convergence within ``max_sweeps`` sweeps.
    """
    a0 = as_matrix(a)
    n = a0.shape[0]
    if a0.shape[1] != n:
        raise InvalidInputError(f"matrix must be square, got {a0.shape}")
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    fro = float(np.sqrt(np.sum(a0 * a0)))
    asym = float(np.sqrt(np.sum((a0 - a0.T) ** 2)))
    if asym > 1e-10 * fro:
        raise InvalidInputError(
            f"matrix is not symmetric: relative asymmetry {asym / fro:.3e}"
        )

    work = 0.5 * (a0 + a0.T)  # exact symmetry for the rotation updates
    v = np.eye(n)
    target = tol * fro
    # Elements this small in magnitude cannot lift the off-diagonal mass
    # above target even if every entry sat at the threshold.
    skip = target / max(n * n, 1)

    for _ in range(max_sweeps):
        if _offdiag_frobenius(work) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= skip:
                    continue
                app = work[p, p]
                aqq = work[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                # Analytic values for the rotated 2x2 block.
                work[p, p] = app - t * apq
                work[q, q] = aqq + t * apq
                work[p, q] = 0.0
                work[q, p] = 0.0

                v_p = v[:, p].copy()
                v_q = v[:, q].copy()
                v[:, p] = c * v_p - s * v_q
                v[:, q] = s * v_p + c * v_q
    else:
        if _offdiag_frobenius(work) > target:
            raise NumericalFailureError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps"
            )

    eigenvalues = np.diagonal(work).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = _fix_column_signs(v[:, order])
    return SymmetricEigenResult(eigenvalues=eigenvalues, eigenvectors=vectors)


def _fix_column_signs(u: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry nonnegative (first index wins ties)."""
    u = u.copy()
    for j in range(u.shape[1]):
        lead = int(np.argmax(np.abs(u[:, j])))
        if u[lead, j] < 0.0:
            u[:, j] = -u[:, j]
    return u


def thin_svd_snapshot(x) -> ThinSvdResult:
    """Thin SVD of a tall matrix via eigendecomposition of the small Gram matrix.

    For X of shape (rows, n) with rows >= n, eigendecomposes X'X, maps
    eigenpairs to singular triplets (s_i = sqrt(l_i), u_i = X v_i / s_i),
    and drops singular values at or below the numerical-rank cutoff. The
    cutoff is applied where the noise actually lives, on the Gram
    eigenvalues (l_i <= eps * l_max * rows, i.e. s_i <= s_max *
    sqrt(eps * rows)): Gram eigenvalues carry absolute error of order
    eps * l_max, so any smaller s_i is pure rounding noise. Left singular
    vectors are re-orthonormalized (two Gram-Schmidt passes) so
    near-cutoff directions stay orthonormal, then sign-fixed per the
    package convention.
    """
    xm = as_matrix(x)
    rows, cols = xm.shape
    if rows < cols:
        raise InvalidInputError(
            f"snapshot SVD needs rows >= cols, got {rows}x{cols}"
        )
    if not np.any(xm):
        raise InvalidInputError("cannot factor an all-zero matrix")

    gram = xm.T @ xm
    eig = symmetric_eigen_descending(gram, tol=1e-12)
    lam = np.maximum(eig.eigenvalues, 0.0)
    sigma = np.sqrt(lam)
    cutoff = np.finfo(np.float64).eps * lam[0] * rows
    rank = int(np.sum(lam > cutoff))

    u = xm @ eig.eigenvectors[:, :rank]
    u /= sigma[:rank]
    for i in range(rank):
        ui = u[:, i]
        for _ in range(2):  # twice-is-enough re-orthogonalization
            if i:
                ui -= u[:, :i] @ (u[:, :i].T @ ui)
        norm = float(np.sqrt(np.sum(ui * ui)))
        if norm == 0.0:
            raise NumericalFailureError(
                f"singular direction {i} collapsed during re-orthonormalization"
            )
        u[:, i] = ui / norm
    u = _fix_column_signs(u)
    return ThinSvdResult(u=u, singular_values=sigma[:rank], rank=rank)


def project(u_r, x) -> np.ndarray:
    """Coefficients of ``x`` in the orthonormal column basis ``u_r`` (U' x)."""
    u = as_matrix(u_r)
    xv = as_vector(x)
    if u.shape[0] != xv.size:
        raise DimensionMismatchError(
            f"basis has {u.shape[0]} rows but vector has dim {xv.size}"
        )
    return u.T @ xv
