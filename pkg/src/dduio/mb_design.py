"""Model-based existence checks and dead-beat UIO synthesis from known (A, B, C, E).

This path needs the true plant matrices, so in practice it serves as the oracle
the data-driven design is validated against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GuaranteeViolated, NotReconstructable, RankDeficientCE, SolvabilityFailed
from .lti_model import SystemRealization, UioMatrices
from .numkit import (
    DEFAULT_TOL,
    Tolerance,
    is_nilpotent,
    max_abs,
    nonzero_eigenvalues,
    numerical_rank,
    pbh_rank_at,
    pseudo_inverse,
)

#: number of random complex points used as a generic-rank witness
N_RANDOM_POINTS = 8

#: absolute threshold on normalised constraint residuals
CONSTRAINT_TOL = 1e-8


def random_test_points(count: int = N_RANDOM_POINTS, seed: int = 0) -> list[complex]:
    """Random nonzero complex numbers with modulus in [0.5, 2]."""
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.5, 2.0, count)
    phi = rng.uniform(0.0, 2 * np.pi, count)
    return list(rho * np.exp(1j * phi))


@dataclass
class ExistenceVerdict:
    cond_1A: bool
    rank_CE: int
    r: int
    cond_1B: bool
    tested_z: list = field(default_factory=list)
    pencil_ranks: list = field(default_factory=list)
    cond_prop5: bool = False
    rank_CB_CE: int = 0

    @property
    def overall(self) -> bool:
        # rank([CB CE]) = m + r already contains rank(CE) = r
        return self.cond_1B and self.cond_prop5

    def as_dict(self) -> dict:
        return {
            "cond_1A": self.cond_1A,
            "rank_CE": self.rank_CE,
            "r": self.r,
            "cond_1B": self.cond_1B,
            "tested_z": [[float(z.real), float(z.imag)] for z in self.tested_z],
            "pencil_ranks": list(self.pencil_ranks),
            "cond_prop5": self.cond_prop5,
            "rank_CB_CE": self.rank_CB_CE,
            "overall": self.overall,
        }


def rosenbrock_pencil(A, E, C, z: complex) -> np.ndarray:
    n, r, p = A.shape[0], E.shape[1], C.shape[0]
    return np.block([[z * np.eye(n) - A, -E], [C, np.zeros((p, r))]]).astype(complex)


def check_fault_identifiability(sys: SystemRealization, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff rank([CB CE]) = m + r."""
    return numerical_rank(sys.C @ np.hstack([sys.B, sys.E]), tol) == sys.m + sys.r


def check_strong_star_reconstructability(
    sys: SystemRealization, tol: Tolerance = DEFAULT_TOL, seed: int = 0
) -> ExistenceVerdict:
    """Evaluate rank(CE) = r, the Rosenbrock pencil condition for z != 0, and
    rank([CB CE]) = m + r.

    The pencil can only lose rank at finitely many points; under rank(CE) = r
    those are unobservable eigenvalues of ``(I - E(CE)^+ C) A``.  We test there,
    at the eigenvalues of A, and at random points for the generic rank.
    """
    n, m, _, r = sys.dims
    CE = sys.C @ sys.E
    rank_CE = numerical_rank(CE, tol) if r else 0
    cond_1A = rank_CE == r

    candidates = list(nonzero_eigenvalues(sys.A))
    if cond_1A:
        D = sys.E @ pseudo_inverse(CE, tol) if r else np.zeros((n, sys.p))
        candidates += list(nonzero_eigenvalues((np.eye(n) - D @ sys.C) @ sys.A))
    candidates += random_test_points(seed=seed)
    ranks = [numerical_rank(rosenbrock_pencil(sys.A, sys.E, sys.C, z), tol) for z in candidates]
    cond_1B = all(rk == n + r for rk in ranks)

    rank_CB_CE = numerical_rank(sys.C @ np.hstack([sys.B, sys.E]), tol)
    return ExistenceVerdict(
        cond_1A=cond_1A,
        rank_CE=rank_CE,
        r=r,
        cond_1B=cond_1B,
        tested_z=candidates,
        pencil_ranks=ranks,
        cond_prop5=rank_CB_CE == m + r,
        rank_CB_CE=rank_CB_CE,
    )


def solve_disturbance_decoupler(sys: SystemRealization, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """The rank-r solution ``D = E (CE)^+`` of ``(I - DC) E = 0``."""
    if sys.r == 0:
        return np.zeros((sys.n, sys.p))
    CE = sys.C @ sys.E
    rank = numerical_rank(CE, tol)
    if rank < sys.r:
        raise RankDeficientCE(f"rank(CE) = {rank} < r = {sys.r}")
    return sys.E @ pseudo_inverse(CE, tol)


def _deadbeat_feedback(A: np.ndarray, B: np.ndarray, tol: Tolerance, scale: float,
                       strict: bool = True) -> np.ndarray:
    """F such that A + B F is nilpotent, by one orthogonal staircase step per level.

    With ``U^T B = [B1; 0]`` (B1 full row rank) and ``U^T A U`` split into the
    first block row and the rest ``W = [H21 Hrr]``, the sub-pair (Hrr, H21) is
    solved recursively for ``Fr`` and the first block row of the closed loop is
    set to ``Fr W``.  The closed loop is then ``[Fr; I] W`` and
    ``W [Fr; I] = Hrr + H21 Fr`` is nilpotent, so the index grows by at most one
    per level: the result has the minimal (controllability-index) nilpotency.
    When the input block vanishes, what is left is the uncontrollable part and
    it must already be nilpotent (``strict``) or is left alone.
    """
    n, m = A.shape[0], B.shape[1]
    if n == 0:
        return np.zeros((m, 0))
    U, s, _ = np.linalg.svd(B, full_matrices=True)
    n1 = int(np.sum(s > tol.rel_rank_tol * scale))
    if n1 == 0:
        ok, _ = is_nilpotent(A, tol)
        if not ok and strict:
            raise NotReconstructable(
                f"uncontrollable block of size {n} is not nilpotent "
                f"(spectral radius {max(abs(np.linalg.eigvals(A))):.3g})"
            )
        return np.zeros((m, n))
    Ah = U.T @ A @ U
    B1_pinv = pseudo_inverse((U.T @ B)[:n1], tol)
    if n1 == n:
        return -B1_pinv @ Ah @ U.T
    W = Ah[n1:, :]
    Fr = _deadbeat_feedback(Ah[n1:, n1:], Ah[n1:, :n1], tol, scale, strict)
    return B1_pinv @ (Fr @ W - Ah[:n1, :]) @ U.T


def is_reconstructable(Abar, C, tol: Tolerance = DEFAULT_TOL) -> bool:
    """PBH test at every nonzero eigenvalue of Abar."""
    Abar = np.asarray(Abar, dtype=float)
    n = Abar.shape[0]
    return all(pbh_rank_at(Abar, C, z, tol) == n for z in nonzero_eigenvalues(Abar))


def deadbeat_gain(Abar, C, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Output-injection gain L making ``Abar - L C`` nilpotent."""
    Abar = np.asarray(Abar, dtype=float)
    n = Abar.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, n)
    if not is_reconstructable(Abar, C, tol):
        raise NotReconstructable("(Abar, C) has an unobservable nonzero eigenvalue")
    scale = max(1.0, np.linalg.norm(Abar, 2), np.linalg.norm(C, 2) if C.size else 0.0)
    L = -_deadbeat_feedback(Abar.T, C.T, tol, scale).T
    ok, _ = is_nilpotent(Abar - L @ C, tol)
    if not ok:
        raise GuaranteeViolated("dead-beat gain failed the nilpotency power test")
    return L


def partial_deadbeat_gain(Abar, C, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Gain placing every observable eigenvalue of ``Abar - L C`` at zero.

    The unobservable eigenvalues cannot be moved and stay where they are; for a
    reconstructable pair this coincides with :func:`deadbeat_gain`.
    """
    Abar = np.asarray(Abar, dtype=float)
    n = Abar.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, n)
    scale = max(1.0, np.linalg.norm(Abar, 2), np.linalg.norm(C, 2) if C.size else 0.0)
    return -_deadbeat_feedback(Abar.T, C.T, tol, scale, strict=False).T


def constraint_residuals(sys: SystemRealization, uio: UioMatrices) -> dict[str, float]:
    """Max-entry residuals of the four dead-beat UIO constraints.

    The three matrix identities are normalised by ``max(1, max|A|)``; the
    nilpotency entry is the max-norm of ``A_uio^n`` on the same scale.
    """
    n = sys.n
    P = np.eye(n) - uio.D_uio @ sys.C
    scale = max(1.0, max_abs(sys.A))
    An = np.linalg.matrix_power(uio.A_uio / max(1.0, max_abs(uio.A_uio)), n)
    return {
        "sylvester": max_abs(P @ sys.A - uio.A_uio @ P - uio.B_y @ sys.C) / scale,
        "input": max_abs(uio.B_u - P @ sys.B) / scale,
        "decoupling": max_abs(P @ sys.E) / scale,
        "nilpotent": max_abs(An),
    }


def satisfies_constraints(sys: SystemRealization, uio: UioMatrices, tol: float = CONSTRAINT_TOL) -> bool:
    res = constraint_residuals(sys, uio)
    return all(v < tol for v in res.values()) and is_nilpotent(uio.A_uio)[0]


def synthesize_uio(sys: SystemRealization, tol: Tolerance = DEFAULT_TOL,
                   require_identifiable: bool = True) -> UioMatrices:
    """Dead-beat UIO from the canonical decoupler ``D = E(CE)^+``.

    With ``require_identifiable=False`` only the observer existence conditions
    (rank(CE) = r and the pencil rank) are demanded, and the returned ``C B_u``
    may be rank deficient.
    """
    verdict = check_strong_star_reconstructability(sys, tol)
    ok = verdict.overall if require_identifiable else (verdict.cond_1A and verdict.cond_1B)
    if not ok:
        raise SolvabilityFailed(f"existence conditions fail: {verdict.as_dict()}")
    D = solve_disturbance_decoupler(sys, tol)
    P = np.eye(sys.n) - D @ sys.C
    L = deadbeat_gain(P @ sys.A, sys.C, tol)
    A_uio = P @ sys.A - L @ sys.C
    uio = UioMatrices(A_uio=A_uio, B_u=P @ sys.B, B_y=L + A_uio @ D, D_uio=D, C=sys.C)
    if require_identifiable and numerical_rank(sys.C @ uio.B_u, tol) != sys.m:
        raise GuaranteeViolated("C B_u lost full column rank")
    return uio
