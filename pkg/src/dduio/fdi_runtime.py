"""Online fault detection and identification from the residual stream."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NotIdentifiable, NotReconstructable
from .lti_model import StackedVector, UioMatrices, run_residual_generator
from .mb_design import deadbeat_gain, partial_deadbeat_gain
from .numkit import DEFAULT_TOL, Tolerance, numerical_rank, pseudo_inverse

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-9


@dataclass(frozen=True)
class MarkovStack:
    N: int
    M: np.ndarray  # (N p) x (N m)


def build_markov_stack(uio: UioMatrices, N: int) -> MarkovStack:
    """Block lower-triangular Toeplitz map from ``f_N(k)`` to ``r_N(k+1)``."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    p, m = uio.p, uio.m
    markov = []
    P = np.eye(uio.n)
    for _ in range(N):
        markov.append(uio.C @ P @ uio.B_u)
        P = uio.A_uio @ P
    M = np.zeros((N * p, N * m))
    for i in range(N):
        for j in range(i + 1):
            M[i * p : (i + 1) * p, j * m : (j + 1) * m] = markov[i - j]
    return MarkovStack(N=N, M=M)


def identify_fault_window(stack: MarkovStack, r_window, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Least-squares ``argmin_f |r_N - M_N f|``, returned as an (N, m) array."""
    r = r_window.value if isinstance(r_window, StackedVector) else np.asarray(r_window, dtype=float).ravel()
    Nm = stack.M.shape[1]
    if r.shape != (stack.M.shape[0],):
        raise ValueError(f"residual window must have length {stack.M.shape[0]}, got {r.shape}")
    if numerical_rank(stack.M, tol) < Nm:
        raise NotIdentifiable(f"M_N has rank {numerical_rank(stack.M, tol)} < N m = {Nm}")
    return (pseudo_inverse(stack.M, tol) @ r).reshape(stack.N, -1)


def settling_gain(uio: UioMatrices, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Output injection K making the estimator error map ``(I - B_u G C) A_uio - K C`` nilpotent.

    ``G = (C B_u)^+``.  Without it the estimator is exact only when it starts
    from the true error state; with it, any start settles within n steps.
    When the fault-to-residual map has nonzero invariant zeros, those modes
    cannot be moved; K then zeroes every other mode and the estimator error
    decays only as fast as the zeros allow (and grows if one lies outside the
    unit circle).
    """
    G = pseudo_inverse(uio.C @ uio.B_u, tol)
    Phi = (np.eye(uio.n) - uio.B_u @ G @ uio.C) @ uio.A_uio
    try:
        return deadbeat_gain(Phi, uio.C, tol)
    except NotReconstructable:
        K = partial_deadbeat_gain(Phi, uio.C, tol)
        rho = float(np.max(np.abs(np.linalg.eigvals(Phi - K @ uio.C))))
        log.warning("fault-to-residual map has nonzero invariant zeros (largest modulus %.3g); "
                    "estimator will not settle in finite time", rho)
        return K


class RecursiveFaultEstimator:
    """One-step-delayed fault estimator driven by the residual stream.

    Feed residuals r(k_start), r(k_start+1), ... through :meth:`push`; each
    call after the first returns ``(k, fhat(k))``.  The internal error estimate
    starts at zero, which is exact once the residual generator has settled and
    before the fault begins.  Rounding errors are propagated by
    :attr:`error_map`; if the fault-to-residual map has an invariant zero
    outside the unit circle they grow without bound, and only the windowed
    estimator is reliable.
    """

    def __init__(self, uio: UioMatrices, k_start: int = 0, settle: bool = True,
                 tol: Tolerance = DEFAULT_TOL):
        CB = uio.C @ uio.B_u
        if numerical_rank(CB, tol) < uio.m:
            raise NotIdentifiable(f"C B_u has rank {numerical_rank(CB, tol)} < m = {uio.m}")
        self.uio = uio
        self.G = pseudo_inverse(CB, tol)
        self.K = settling_gain(uio, tol) if settle else np.zeros((uio.n, uio.p))
        self.CA = uio.C @ uio.A_uio
        # e - ehat evolves by this map once the estimator runs
        self.error_map = (np.eye(uio.n) - uio.B_u @ self.G @ uio.C) @ uio.A_uio - self.K @ uio.C
        self.k_start = k_start
        self.reset()

    def reset(self):
        self.k = self.k_start
        self.ehat = np.zeros(self.uio.n)
        self._r_prev = None

    def push(self, r) -> tuple[int, np.ndarray] | None:
        r = np.asarray(r, dtype=float).ravel()
        if self._r_prev is None:
            self._r_prev = r
            return None
        u = self.uio
        fhat = self.G @ (r - self.CA @ self.ehat)
        self.ehat = u.A_uio @ self.ehat + u.B_u @ fhat + self.K @ (self._r_prev - u.C @ self.ehat)
        self._r_prev = r
        k, self.k = self.k, self.k + 1
        return k, fhat


def identify_fault_recursive(uio: UioMatrices, residuals, k_start: int, settle: bool = True,
                             tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Estimates fhat(k) for k = k_start .. len(residuals)-2, one row each."""
    residuals = np.asarray(residuals, dtype=float)
    est = RecursiveFaultEstimator(uio, k_start, settle=settle, tol=tol)
    out = []
    for r in residuals[k_start:]:
        step = est.push(r)
        if step is not None:
            out.append(step[1])
    return np.array(out).reshape(-1, uio.m)


def detect(residuals, threshold: float = DEFAULT_THRESHOLD, start: int = 0) -> int | None:
    """First k >= start with ``|r(k)|_2 > threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if start < 0:
        raise ValueError("start must be nonnegative")
    norms = np.linalg.norm(np.asarray(residuals, dtype=float).reshape(len(residuals), -1), axis=1)
    hits = np.flatnonzero(norms[start:] > threshold)
    return int(hits[0]) + start if hits.size else None


@dataclass
class FaultTrace:
    residuals: np.ndarray
    threshold: float
    detection_time: int | None
    k_id: int
    estimates: np.ndarray  # row i is fhat(k_id + i)
    window_N: int | None = None
    window_estimate: np.ndarray | None = None  # fhat_N(K* - 1), shape (N, m)
    extra: dict = field(default_factory=dict)

    @property
    def estimate_times(self) -> np.ndarray:
        return np.arange(self.k_id, self.k_id + len(self.estimates))


def monitor(uio: UioMatrices, u, y, k_id: int = 0, threshold: float = DEFAULT_THRESHOLD,
            window_N: int | None = None, z0=None, settle: bool = True,
            tol: Tolerance = DEFAULT_TOL, arm_at: int | None = None) -> FaultTrace:
    """Run the residual generator on (u, y), detect, and estimate the fault.

    Detection is armed at ``arm_at``, by default the nilpotency index of
    ``A_uio``: before that the residual still carries the start-up error
    ``C A_uio^k e(0)`` of an unknown initial state.
    """
    _, res = run_residual_generator(uio, u, y, z0)
    if arm_at is None:
        ok, idx = uio.nilpotency(tol)
        arm_at = idx if ok else 0
    k_star = detect(res, threshold, start=arm_at)
    est = identify_fault_recursive(uio, res, k_id, settle=settle, tol=tol)
    trace = FaultTrace(residuals=res, threshold=threshold, detection_time=k_star, k_id=k_id, estimates=est)
    trace.extra["arm_at"] = arm_at
    if window_N and k_star is not None and k_star + window_N <= len(res):
        stack = build_markov_stack(uio, window_N)
        window = res[k_star : k_star + window_N].ravel()
        trace.window_N = window_N
        trace.window_estimate = identify_fault_window(stack, window, tol)
    return trace
