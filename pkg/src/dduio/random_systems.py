"""Seeded generators of admissible and deliberately broken plants.

Used by the property suites and the ``reproduce-example --sweep`` run.  Every
generator returns a stable state matrix (spectral radius 0.9) so that long
experiments stay well scaled.
"""
from __future__ import annotations

import numpy as np

from .lti_model import SignalTrace, SystemRealization, simulate_plant
from .numkit import random_orthogonal

BROKEN_KINDS = ("ce_deficient", "few_outputs", "unobservable_mode", "masked_by_disturbance")


def _stable(n: int, rng: np.random.Generator, radius: float = 0.9) -> np.ndarray:
    A = rng.standard_normal((n, n))
    rho = max(abs(np.linalg.eigvals(A)))
    return A * (radius / rho) if rho > 0 else A


def _dims(rng: np.random.Generator, n_max: int = 8) -> tuple[int, int, int, int]:
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(1, 3))
    r = int(rng.integers(0, min(2, n - m) + 1))
    p = int(rng.integers(m + r, n + 1))
    return n, m, p, r


def admissible_system(rng: np.random.Generator, n_max: int = 8) -> SystemRealization:
    """Generic plant with n >= p >= m + r, so [CB CE] has full column rank and
    (A, E, C) has no invariant zeros."""
    n, m, p, r = _dims(rng, n_max)
    return SystemRealization(
        A=_stable(n, rng),
        B=rng.standard_normal((n, m)),
        C=rng.standard_normal((p, n)),
        E=rng.standard_normal((n, r)),
    )


def _hide(A, B, C, E, rng) -> SystemRealization:
    Q = random_orthogonal(A.shape[0], rng)
    return SystemRealization(A=Q.T @ A @ Q, B=Q.T @ B, C=C @ Q, E=Q.T @ E)


def broken_system(rng: np.random.Generator, kind: str, n_max: int = 8) -> SystemRealization:
    """Plant violating the existence conditions in a specific way.

    ce_deficient         a column of E lies in ker C
    few_outputs          p < m + r
    unobservable_mode    a mode at z = 0.5 is invisible at the output
    masked_by_disturbance  a mode at z = 0.5 reaches the output only along E
    """
    if kind == "ce_deficient":
        n = int(rng.integers(4, n_max + 1))
        m, r = 1, int(rng.integers(1, 3))
        p = int(rng.integers(m + r, n))
        C = rng.standard_normal((p, n))
        E = rng.standard_normal((n, r))
        kernel = np.linalg.svd(C)[2][p:].T
        E[:, 0] = kernel @ rng.standard_normal(kernel.shape[1])
        return SystemRealization(A=_stable(n, rng), B=rng.standard_normal((n, m)), C=C, E=E)
    if kind == "few_outputs":
        n = int(rng.integers(3, n_max + 1))
        m, r = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        p = int(rng.integers(max(1, r), m + r))
        return SystemRealization(
            A=_stable(n, rng), B=rng.standard_normal((n, m)),
            C=rng.standard_normal((p, n)), E=rng.standard_normal((n, r)),
        )
    if kind in ("unobservable_mode", "masked_by_disturbance"):
        n = int(rng.integers(4, n_max + 1))
        m = 1
        r = int(rng.integers(1, 3))
        p = int(rng.integers(m + r, n))
        n1 = n - 1
        A = np.zeros((n, n))
        A[:n1, :n1] = _stable(n1, rng)
        A[n1, n1] = 0.5
        B = rng.standard_normal((n, m))
        E = np.zeros((n, r))
        E[:n1] = rng.standard_normal((n1, r))
        if kind == "masked_by_disturbance":
            A[:n1, n1] = E[:n1] @ rng.standard_normal(r)
        C = np.hstack([rng.standard_normal((p, n1)), np.zeros((p, 1))])
        return _hide(A, B, C, E, rng)
    raise ValueError(f"unknown broken kind {kind!r}")


def experiment(sys: SystemRealization, rng: np.random.Generator, T: int | None = None,
               input_amplitude: float = 5.0, disturbance_amplitude: float = 2.0) -> SignalTrace:
    """Fault-free experiment with i.i.d. uniform input and disturbance."""
    if T is None:
        T = 4 * (sys.n + sys.m + sys.r) + 40
    x0 = rng.uniform(-1.0, 1.0, sys.n)
    u = rng.uniform(-input_amplitude, input_amplitude, (T - 1, sys.m))
    d = rng.uniform(-disturbance_amplitude, disturbance_amplitude, (T - 1, sys.r))
    return simulate_plant(sys, x0, u, d, T=T)
