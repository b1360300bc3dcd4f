"""Plant, UIO residual generator, trajectory simulation and signal stacking.

Time convention: a trace of horizon T stores ``x`` and ``y`` at k = 0..T-1 and
``u``, ``d``, ``f`` at k = 0..T-2.  Signals are time-major arrays (one row per
sample); the data matrices in :mod:`dduio.dd_design` are their transposes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .numkit import DEFAULT_TOL, Tolerance, as_matrix, is_nilpotent, numerical_rank


def _block(M, rows: int, cols: int, name: str) -> np.ndarray:
    M = np.zeros((rows, cols)) if np.size(M) == 0 else as_matrix(M)
    if M.shape != (rows, cols):
        raise DimensionError(f"{name} must be {rows}x{cols}, got {M.shape}")
    return M


@dataclass(frozen=True)
class SystemRealization:
    """Ground-truth plant ``x+ = Ax + Bu + Ed + Bf``, ``y = Cx``.

    Only the simulator and the model-based oracle see this; the data-driven
    design never does.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B)
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        E = np.asarray(self.E, dtype=float)
        E = np.zeros((n, 0)) if E.size == 0 else as_matrix(E)
        if B.shape[0] != n or E.shape[0] != n:
            raise DimensionError(f"B and E must have n={n} rows, got {B.shape} and {E.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "E", E)
        if self.r and numerical_rank(E) != self.r:
            raise DimensionError(f"E must have full column rank r={self.r}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def r(self) -> int:
        return self.E.shape[1]

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.n, self.m, self.p, self.r


@dataclass(frozen=True)
class UioMatrices:
    """Residual generator ``z+ = A_uio z + B_u u + B_y y``, ``xhat = z + D_uio y``."""

    A_uio: np.ndarray
    B_u: np.ndarray
    B_y: np.ndarray
    D_uio: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A_uio)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A_uio must be square, got {A.shape}")
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        p = C.shape[0]
        B_u = as_matrix(self.B_u)
        if B_u.shape[0] != n:
            raise DimensionError(f"B_u must have {n} rows, got {B_u.shape}")
        object.__setattr__(self, "A_uio", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "B_u", B_u)
        object.__setattr__(self, "B_y", _block(self.B_y, n, p, "B_y"))
        object.__setattr__(self, "D_uio", _block(self.D_uio, n, p, "D_uio"))

    @property
    def n(self) -> int:
        return self.A_uio.shape[0]

    @property
    def m(self) -> int:
        return self.B_u.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def nilpotency(self, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, int | None]:
        return is_nilpotent(self.A_uio, tol)


@dataclass
class SignalTrace:
    u: np.ndarray  # (T-1, m)
    d: np.ndarray  # (T-1, r)
    f: np.ndarray  # (T-1, m)
    x: np.ndarray  # (T, n)
    y: np.ndarray  # (T, p)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T = len(self.x)
        for name in ("u", "d", "f"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1) if arr.size else np.zeros((T - 1, 0))
            if len(arr) != T - 1:
                raise DimensionError(f"{name} must have T-1={T - 1} samples, got {len(arr)}")
            setattr(self, name, arr)
        self.x = np.asarray(self.x, dtype=float).reshape(T, -1)
        self.y = np.asarray(self.y, dtype=float).reshape(T, -1)
        if len(self.y) != T:
            raise DimensionError("x and y must have the same number of samples")

    @property
    def T(self) -> int:
        return len(self.x)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.x.shape[1], self.u.shape[1], self.y.shape[1], self.d.shape[1]


@dataclass(frozen=True)
class StackedVector:
    name: str
    k: int
    N: int
    value: np.ndarray


def _sequence(seq, length: int, width: int, name: str) -> np.ndarray:
    if seq is None:
        return np.zeros((length, width))
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if width == 1 or arr.size == 0 else arr.reshape(-1, width)
    if width == 0:
        return np.zeros((length, 0))
    if arr.ndim != 2 or arr.shape[1] != width:
        raise DimensionError(f"{name} samples must have length {width}, got shape {arr.shape}")
    if len(arr) < length:
        raise DimensionError(f"{name} needs at least {length} samples, got {len(arr)}")
    return arr[:length]


def simulate_plant(sys: SystemRealization, x0, u, d=None, f=None, T: int | None = None) -> SignalTrace:
    """Iterate the plant for T samples; missing ``d``/``f`` default to zero."""
    if T is None:
        T = len(np.asarray(u)) + 1
    if T < 1:
        raise DimensionError(f"horizon must be positive, got T={T}")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (sys.n,):
        raise DimensionError(f"x0 must have length {sys.n}, got {x0.shape}")
    u = _sequence(u, T - 1, sys.m, "u")
    d = _sequence(d, T - 1, sys.r, "d")
    f = _sequence(f, T - 1, sys.m, "f")
    x = np.empty((T, sys.n))
    x[0] = x0
    for k in range(T - 1):
        x[k + 1] = sys.A @ x[k] + sys.B @ (u[k] + f[k]) + sys.E @ d[k]
    y = x @ sys.C.T
    return SignalTrace(u=u, d=d, f=f, x=x, y=y)


def run_residual_generator(uio: UioMatrices, u, y, z0=None) -> tuple[np.ndarray, np.ndarray]:
    """Drive the residual generator with measured ``u`` and ``y``.

    Returns ``(xhat, res)`` with one row per output sample.
    """
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    T = len(y)
    if y.shape[1] != uio.p:
        raise DimensionError(f"y samples must have length {uio.p}, got {y.shape[1]}")
    u = _sequence(u, T - 1, uio.m, "u")
    z = np.zeros(uio.n) if z0 is None else np.asarray(z0, dtype=float).ravel()
    if z.shape != (uio.n,):
        raise DimensionError(f"z0 must have length {uio.n}")
    xhat = np.empty((T, uio.n))
    for k in range(T):
        xhat[k] = z + uio.D_uio @ y[k]
        if k < T - 1:
            z = uio.A_uio @ z + uio.B_u @ u[k] + uio.B_y @ y[k]
    res = y - xhat @ uio.C.T
    return xhat, res


def stack(signal, k: int, N: int, name: str = "") -> StackedVector:
    """``[w(k); w(k+1); ...; w(k+N-1)]`` for a time-major signal."""
    arr = np.asarray(signal, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if N < 1 or k < 0 or k + N > len(arr):
        raise IndexError(f"window k={k}, N={N} outside a signal of {len(arr)} samples")
    return StackedVector(name=name, k=k, N=N, value=arr[k : k + N].reshape(-1))


def estimation_error(trace: SignalTrace, xhat) -> np.ndarray:
    xhat = np.asarray(xhat, dtype=float).reshape(trace.x.shape)
    return trace.x - xhat
