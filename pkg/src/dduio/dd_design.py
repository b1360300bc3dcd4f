"""Dead-beat UIO residual generator designed from recorded data only.

Input is one fault-free experiment (inputs, states, outputs) of the plant; the
matrices A, B and E are never reconstructed.  The pipeline is

1. :func:`build_data_matrices` slices the trace into U_p, X_p, Y_p, X_f, Y_f;
2. :func:`check_dd_solvability` decides solvability from rank tests on data;
3. :func:`run_algorithm_one` compresses the columns of the data, picks the
   rank-r solution of ``X_E = T4 Y_E``, and closes the loop with a dead-beat
   output injection.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FaultyHistoricalData,
    GuaranteeViolated,
    HorizonTooShort,
    NotReconstructable,
    RankDeficientRegressor,
    RankMismatch,
    ResidualTooLarge,
    SolvabilityFailed,
)
from .lti_model import SignalTrace, UioMatrices
from .mb_design import N_RANDOM_POINTS, deadbeat_gain, is_reconstructable, random_test_points
from .numkit import (
    DEFAULT_TOL,
    Tolerance,
    max_abs,
    nonzero_eigenvalues,
    null_space_basis,
    numerical_rank,
    pseudo_inverse,
)

IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class DataMatrices:
    U_p: np.ndarray  # m x (T-1)
    X_p: np.ndarray  # n x (T-1)
    Y_p: np.ndarray  # p x (T-1)
    X_f: np.ndarray  # n x (T-1)
    Y_f: np.ndarray  # p x (T-1)
    r_claimed: int

    def __post_init__(self):
        widths = {M.shape[1] for M in (self.U_p, self.X_p, self.Y_p, self.X_f, self.Y_f)}
        if len(widths) != 1:
            raise ValueError(f"data blocks must share the column count, got {sorted(widths)}")
        if self.X_p.shape[0] != self.X_f.shape[0] or self.Y_p.shape[0] != self.Y_f.shape[0]:
            raise ValueError("past/future blocks must have matching row counts")

    @property
    def T(self) -> int:
        return self.U_p.shape[1] + 1

    @property
    def n(self) -> int:
        return self.X_p.shape[0]

    @property
    def m(self) -> int:
        return self.U_p.shape[0]

    @property
    def p(self) -> int:
        return self.Y_p.shape[0]

    @property
    def scale(self) -> float:
        """``max(1, max |entry|)`` over all five blocks."""
        return max(1.0, *(max_abs(M) for M in (self.U_p, self.X_p, self.Y_p, self.X_f, self.Y_f)))

    @property
    def regressor(self) -> np.ndarray:
        return np.vstack([self.U_p, self.X_p])


def build_data_matrices(trace: SignalTrace, r_claimed: int, tol: Tolerance = DEFAULT_TOL) -> DataMatrices:
    n, m, _, _ = trace.dims
    if trace.f.size and np.any(np.abs(trace.f) > 0.0):
        raise FaultyHistoricalData("historical data must be fault-free (f != 0 found)")
    if trace.T < m + n + r_claimed + 2:
        raise HorizonTooShort(f"T={trace.T} < m+n+r+2 = {m + n + r_claimed + 2}")
    return DataMatrices(
        U_p=trace.u.T.copy(),
        X_p=trace.x[:-1].T.copy(),
        Y_p=trace.y[:-1].T.copy(),
        X_f=trace.x[1:].T.copy(),
        Y_f=trace.y[1:].T.copy(),
        r_claimed=int(r_claimed),
    )


def disturbance_rank_excess(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL) -> int:
    return numerical_rank(np.vstack([dm.U_p, dm.X_p, dm.X_f]), tol) - (dm.n + dm.m)


def estimate_disturbance_dim(datasets: list[DataMatrices], tol: Tolerance = DEFAULT_TOL) -> int:
    """Largest ``rank([U_p; X_p; X_f]) - (n + m)`` over the experiments, at least 0."""
    if not datasets:
        raise ValueError("need at least one dataset")
    return max(0, *(disturbance_rank_excess(dm, tol) for dm in datasets))


@dataclass
class DdSolvabilityReport:
    cond_iia: bool
    tested_z: list
    ranks_iia: list
    cond_iib: bool
    rank_iib: int
    richness_ok: bool
    rank_regressor: int
    rank_excess: int
    target: int
    r: int

    @property
    def overall(self) -> bool:
        return self.cond_iia and self.cond_iib and self.richness_ok

    def failures(self) -> list[str]:
        out = []
        if not self.richness_ok:
            out.append(
                f"richness: rank([U_p;X_p]) = {self.rank_regressor}, "
                f"rank([U_p;X_p;X_f]) - (n+m) = {self.rank_excess} (r claimed {self.r})"
            )
        if not self.cond_iia:
            bad = [(z, rk) for z, rk in zip(self.tested_z, self.ranks_iia) if rk != self.target]
            out.append(f"ii-a: pencil rank below {self.target} at {len(bad)} point(s)")
        if not self.cond_iib:
            out.append(f"ii-b: rank([X_p;Y_f]) = {self.rank_iib} != {self.target}")
        return out

    def as_dict(self) -> dict:
        return {
            "cond_iia": self.cond_iia,
            "tested_z": [[float(np.real(z)), float(np.imag(z))] for z in self.tested_z],
            "ranks_iia": list(self.ranks_iia),
            "cond_iib": self.cond_iib,
            "rank_iib": self.rank_iib,
            "richness_ok": self.richness_ok,
            "rank_regressor": self.rank_regressor,
            "rank_excess": self.rank_excess,
            "target_rank": self.target,
            "r_claimed": self.r,
            "overall": self.overall,
        }


@dataclass
class AlgorithmOneTrace:
    S: np.ndarray
    Y_B: np.ndarray
    Y_E: np.ndarray
    Y_A: np.ndarray
    X_B: np.ndarray
    X_E: np.ndarray
    X_A: np.ndarray
    T1: np.ndarray | None = None
    T3: np.ndarray | None = None  # candidate T3*, before output injection
    T4: np.ndarray | None = None
    L: np.ndarray | None = None
    C_hat: np.ndarray | None = None
    checks: dict = field(default_factory=dict)

    def matrices(self) -> dict[str, np.ndarray]:
        names = ("S", "Y_B", "Y_E", "Y_A", "X_B", "X_E", "X_A", "T1", "T3", "T4", "L", "C_hat")
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}


def data_pencil(dm: DataMatrices, z: complex) -> np.ndarray:
    """``[z X_p - X_f; Y_p; U_p]``."""
    return np.vstack([z * dm.X_p - dm.X_f, dm.Y_p, dm.U_p]).astype(complex)


def compress_columns(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL) -> AlgorithmOneTrace:
    """Nonsingular S with ``[U_p; X_p] S = [[I, 0, 0], [0, 0, I]]`` and the blocks of Y_f S, X_f S.

    ``S = [S1 S2 S3]``: S1 and S3 are the columns of the pseudo-inverse of the
    regressor, S2 an orthonormal basis of its kernel.
    """
    n, m = dm.n, dm.m
    G = dm.regressor
    if numerical_rank(G, tol) != n + m:
        raise RankDeficientRegressor(f"rank([U_p;X_p]) = {numerical_rank(G, tol)} < n+m = {n + m}")
    Gp = pseudo_inverse(G, tol)
    S1, S3 = Gp[:, :m], Gp[:, m:]
    S2 = null_space_basis(G, tol)
    S = np.hstack([S1, S2, S3])
    w = S2.shape[1]
    YS, XS = dm.Y_f @ S, dm.X_f @ S
    out = AlgorithmOneTrace(
        S=S,
        Y_B=YS[:, :m], Y_E=YS[:, m : m + w], Y_A=YS[:, m + w :],
        X_B=XS[:, :m], X_E=XS[:, m : m + w], X_A=XS[:, m + w :],
    )
    pattern = np.zeros((n + m, S.shape[1]))
    pattern[:m, :m] = np.eye(m)
    pattern[m:, m + w :] = np.eye(n)
    out.checks["block_pattern"] = max_abs(G @ S - pattern)
    return out


def solve_t4(X_E, Y_E, r: int, tol: Tolerance = DEFAULT_TOL, scale: float = 1.0,
             reference: float | None = None) -> np.ndarray:
    """Minimum-norm solution ``T4 = X_E Y_E^+`` of ``X_E = T4 Y_E``; must have rank r.

    ``reference`` anchors the truncation of ``Y_E``'s singular values; without
    it a Y_E that is zero up to rounding (r = 0) would be inverted as if exact.
    """
    X_E, Y_E = np.asarray(X_E, dtype=float), np.asarray(Y_E, dtype=float)
    T4 = X_E @ pseudo_inverse(Y_E, tol, reference)
    resid = max_abs(X_E - T4 @ Y_E)
    if resid >= IDENTITY_TOL * max(1.0, scale):
        raise ResidualTooLarge(f"max|X_E - T4 Y_E| = {resid:.3g}; check rank(CE) or the claimed r")
    rank = numerical_rank(T4, tol, reference=None) if max_abs(T4) > IDENTITY_TOL * max(1.0, scale) else 0
    if rank != r:
        raise RankMismatch(f"rank(T4) = {rank}, expected r = {r}")
    return T4


def _t4_reference(dm: DataMatrices) -> float:
    return float(np.linalg.norm(dm.Y_f, 2))


def check_dd_solvability(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> DdSolvabilityReport:
    """Rank conditions on the data that decide solvability.

    ii-b is a single rank.  ii-a must hold for every nonzero z; it is tested at
    random points (generic rank) and at the nonzero eigenvalues of the
    candidate T3*, where the pencil can drop rank.
    """
    n, m, r = dm.n, dm.m, dm.r_claimed
    target = n + r + m
    rank_reg = numerical_rank(dm.regressor, tol)
    excess = disturbance_rank_excess(dm, tol)
    richness_ok = rank_reg == n + m and excess == r

    rank_iib = numerical_rank(np.vstack([dm.X_p, dm.Y_f]), tol)

    points = random_test_points(N_RANDOM_POINTS, seed=seed)
    if rank_reg == n + m:
        comp = compress_columns(dm, tol)
        T4 = comp.X_E @ pseudo_inverse(comp.Y_E, tol, _t4_reference(dm))
        points += list(nonzero_eigenvalues(comp.X_A - T4 @ comp.Y_A))
    ranks = [numerical_rank(data_pencil(dm, z), tol) for z in points]
    report = DdSolvabilityReport(
        cond_iia=all(rk == target for rk in ranks),
        tested_z=points,
        ranks_iia=ranks,
        cond_iib=rank_iib == target,
        rank_iib=rank_iib,
        richness_ok=richness_ok,
        rank_regressor=rank_reg,
        rank_excess=excess,
        target=target,
        r=r,
    )
    return report


def data_identity_residual(dm: DataMatrices, uio: UioMatrices, L: np.ndarray) -> float:
    """``max|X_f - (T1 U_p + T2 Y_p + T3 X_p + T4 Y_f)|`` with T2 = L and T3 = A_uio."""
    fit = uio.B_u @ dm.U_p + L @ dm.Y_p + uio.A_uio @ dm.X_p + uio.D_uio @ dm.Y_f
    return max_abs(dm.X_f - fit)


def run_algorithm_one(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL, seed: int = 0
                      ) -> tuple[UioMatrices, AlgorithmOneTrace]:
    report = check_dd_solvability(dm, tol, seed)
    if not report.overall:
        raise SolvabilityFailed("; ".join(report.failures()))
    scale = dm.scale
    C_hat = dm.Y_p @ pseudo_inverse(dm.X_p, tol)
    tr = compress_columns(dm, tol)
    T4 = solve_t4(tr.X_E, tr.Y_E, dm.r_claimed, tol, scale, _t4_reference(dm))
    T1 = tr.X_B - T4 @ tr.Y_B
    T3 = tr.X_A - T4 @ tr.Y_A
    tr.T1, tr.T3, tr.T4, tr.C_hat = T1, T3, T4, C_hat

    # both hold for every rank-r T4 once the data conditions pass
    if not is_reconstructable(T3, C_hat, tol):
        raise GuaranteeViolated("(T3*, C) is not reconstructable")
    if numerical_rank(C_hat @ T1, tol) != dm.m:
        raise GuaranteeViolated("C T1* is not of full column rank")
    try:
        L = deadbeat_gain(T3, C_hat, tol)
    except NotReconstructable as exc:
        raise GuaranteeViolated(str(exc)) from exc
    tr.L = L

    A_uio = T3 - L @ C_hat
    uio = UioMatrices(A_uio=A_uio, B_u=T1, B_y=L + A_uio @ T4, D_uio=T4, C=C_hat)
    tr.checks["data_identity"] = data_identity_residual(dm, uio, L)
    tr.checks["x_e_fit"] = max_abs(tr.X_E - T4 @ tr.Y_E)
    tr.checks["rank_T4"] = numerical_rank(T4, tol) if dm.r_claimed else 0
    if tr.checks["data_identity"] >= IDENTITY_TOL * scale:
        raise GuaranteeViolated(f"data identity residual {tr.checks['data_identity']:.3g} exceeds tolerance")
    return uio, tr
