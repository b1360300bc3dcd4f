"""Dense-matrix primitives with one explicit tolerance policy.

Rank decisions are relative to the largest singular value; "is this numerically
zero" decisions are absolute.  Every rank, inverse and nilpotency verdict made
elsewhere in the package goes through this module.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerance:
    rel_rank_tol: float = 1e-9
    abs_zero_tol: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.rel_rank_tol < 1.0):
            raise ValueError(f"rel_rank_tol must lie in (0, 1), got {self.rel_rank_tol}")
        if not self.abs_zero_tol > 0.0:
            raise ValueError(f"abs_zero_tol must be positive, got {self.abs_zero_tol}")


DEFAULT_TOL = Tolerance()


def as_matrix(M, dtype=float) -> np.ndarray:
    """Coerce to a 2-D array; scalars become 1x1 and vectors become columns."""
    M = np.asarray(M, dtype=dtype)
    if M.ndim == 0:
        return M.reshape(1, 1)
    if M.ndim == 1:
        return M.reshape(-1, 1)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {M.shape}")
    return M


def max_abs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def singular_values(M) -> np.ndarray:
    M = np.asarray(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M, tol: Tolerance = DEFAULT_TOL, reference: float | None = None) -> int:
    """Number of singular values above ``rel_rank_tol * sigma_max``.

    ``reference`` replaces sigma_max as the scale the threshold is relative to;
    the staircase reductions use it so that a block that is zero up to rounding
    is not promoted to full rank just because it is small.  Without a
    reference, a matrix with sigma_max <= abs_zero_tol counts as zero.
    """
    s = singular_values(M)
    if s.size == 0:
        return 0
    if reference is None and s[0] <= tol.abs_zero_tol:
        return 0
    ref = s[0] if reference is None else max(float(reference), s[0])
    if ref == 0.0:
        return 0
    return int(np.sum(s > tol.rel_rank_tol * ref))


def pseudo_inverse(M, tol: Tolerance = DEFAULT_TOL, reference: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse, truncating singular values with the rank policy.

    As in :func:`numerical_rank`, ``reference`` sets the scale the truncation
    threshold is relative to (default: the largest singular value).  A
    numerically zero matrix, as judged by :func:`numerical_rank`, maps to zero.
    """
    M = np.asarray(M)
    if M.size == 0 or (reference is None and numerical_rank(M, tol) == 0):
        return np.zeros(M.shape[::-1], dtype=M.dtype)
    if reference is None:
        return np.linalg.pinv(M, rcond=tol.rel_rank_tol)
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    keep = s > tol.rel_rank_tol * max(float(reference), s[0])
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def null_space_basis(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ker(M) as columns; shape (cols, cols - rank)."""
    M = as_matrix(M)
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncols)
    _, _, vh = np.linalg.svd(M, full_matrices=True)
    rank = numerical_rank(M, tol)
    return vh[rank:].conj().T


def range_basis(M, tol: Tolerance = DEFAULT_TOL, reference: float | None = None) -> np.ndarray:
    """Orthonormal basis of im(M) as columns."""
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    u, _, _ = np.linalg.svd(M, full_matrices=True)
    return u[:, : numerical_rank(M, tol, reference)]


def is_nilpotent(M, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, int | None]:
    """Power test for nilpotency.

    Returns ``(True, k)`` with the least ``k <= n`` such that the max-norm of
    ``M^k`` drops below ``abs_zero_tol``, else ``(False, None)``.  Powers are
    taken of ``M / max(1, max|M|)`` so the verdict does not depend on units.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"is_nilpotent needs a square matrix, got {M.shape}")
    if n == 0:
        return True, 0
    Ms = M / max(1.0, max_abs(M))
    P = np.eye(n)
    for k in range(1, n + 1):
        P = P @ Ms
        if max_abs(P) < tol.abs_zero_tol:
            return True, k
    return False, None


def pbh_rank_at(Apart, Cpart, z: complex, tol: Tolerance = DEFAULT_TOL) -> int:
    """Rank of ``[zI - A; C]`` evaluated at a (complex) point ``z``."""
    Apart = as_matrix(Apart)
    n = Apart.shape[0]
    Cpart = np.asarray(Cpart, dtype=float).reshape(-1, n)
    stacked = np.vstack([z * np.eye(n) - Apart, Cpart]).astype(complex)
    return numerical_rank(stacked, tol)


def nonzero_eigenvalues(M, zero_tol: float = 1e-5) -> np.ndarray:
    """Eigenvalues of M whose magnitude exceeds ``zero_tol * max(1, max|M|)``.

    The threshold is loose on purpose: a defective zero eigenvalue of
    multiplicity k is computed with magnitude around eps**(1/k).
    """
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    w = np.linalg.eigvals(M)
    return w[np.abs(w) > zero_tol * max(1.0, max_abs(M))]


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
