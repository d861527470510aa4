"""Dense linear-algebra kernel: SVD, numerical rank, truncated pseudoinverse.

Every fitting routine in the package reduces to a minimum-norm least-squares
solve through a truncated SVD, so the truncation convention lives here and
nowhere else: a singular value is kept iff ``sigma_i > tol * sigma_1``.
All matrices are dense float64, row-major (plain ``np.ndarray``).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_RANK_TOL = 1e-8


class SvdConvergenceError(np.linalg.LinAlgError):
    """Raised when the underlying iterative SVD fails to converge."""


class SvdResult(NamedTuple):
    """Thin SVD ``m = U @ diag(s) @ V.T`` with column-orthonormal U, V."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray


def svd(m: np.ndarray) -> SvdResult:
    """Thin singular value decomposition of a real matrix.

    Args:
        m: 2-D array with finite entries.

    Returns:
        SvdResult with singular values in nonincreasing order.

    Raises:
        SvdConvergenceError: the LAPACK iteration did not converge.
        ValueError: non-finite entries or wrong dimensionality.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as err:
        # LAPACK does not expose its internal iteration count; surface its
        # message (which names the failing superdiagonal count) instead.
        raise SvdConvergenceError(
            f"SVD failed to converge on {m.shape[0]}x{m.shape[1]} matrix: {err}"
        ) from err
    return SvdResult(U=u, s=s, V=vh.T)


def numerical_rank(sv: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values above ``tol`` relative to the largest one.

    Returns 0 when the largest singular value is 0 (zero matrix).
    """
    sv = np.asarray(sv, dtype=float)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def truncated_pinv(m: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse keeping only sigma_i > tol * sigma_1.

    Computed as ``sum_i sigma_i^-1 v_i u_i^T`` over the retained singular
    triplets; a zero matrix maps to a zero pseudoinverse.
    """
    u, s, v = svd(m)
    r = numerical_rank(s, tol)
    if r == 0:
        return np.zeros((m.shape[1], m.shape[0]))
    return (v[:, :r] / s[:r]) @ u[:, :r].T


def lstsq_min_norm(
    lhs: np.ndarray, rhs: np.ndarray, tol: float = DEFAULT_RANK_TOL
) -> tuple[np.ndarray, int]:
    """Minimum-norm solution K of ``rhs = K @ lhs`` in the least-squares sense.

    Minimizes ``||rhs - K @ lhs||_F``; among all minimizers returns the one
    of minimal Frobenius norm, ``K = rhs @ pinv(lhs)`` with the pseudoinverse
    truncated at ``tol``.

    Args:
        lhs: (p, N) regressor matrix.
        rhs: (m, N) target matrix (same column count as lhs).
        tol: relative singular-value cutoff.

    Returns:
        (K, rank_used) where K is (m, p).
    """
    lhs = np.atleast_2d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    if lhs.shape[1] != rhs.shape[1]:
        raise ValueError(
            f"column mismatch: lhs has {lhs.shape[1]} columns, rhs has {rhs.shape[1]}"
        )
    u, s, v = svd(lhs)
    r = numerical_rank(s, tol)
    if r == 0:
        return np.zeros((rhs.shape[0], lhs.shape[0])), 0
    # K = rhs @ V_r diag(1/s_r) U_r^T, assembled right-to-left.
    return ((rhs @ v[:, :r]) / s[:r]) @ u[:, :r].T, r
