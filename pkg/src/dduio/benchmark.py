"""Five-state benchmark plant with two disturbances, its published residual
generator, the fault profiles and the four monitoring scenarios, plus the
end-to-end reproduction run used by ``dduio reproduce-example``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import dd_design, fdi_runtime, mb_design
from .errors import DduioError, SolvabilityFailed
from .lti_model import SignalTrace, SystemRealization, UioMatrices, run_residual_generator, simulate_plant
from .numkit import DEFAULT_TOL, Tolerance, is_nilpotent

A = np.array([
    [0.8, 0.0, 0.0, 0.0, 0.0],
    [-0.8, 0.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, -1.2, -0.5, -1.3],
    [2.0, -0.6, 2.6, 1.0, 2.3],
    [0.8, -0.9, 0.6, 0.1, 0.0],
])
B = np.array([[1.0], [0.0], [0.0], [0.0], [0.0]])
E = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
C = np.array([
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, -2.0, 0.0],
    [-1.0, 0.0, 0.0, 1.0, 0.0],
])

PUBLISHED_UIO = UioMatrices(
    A_uio=np.array([
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.8, 0.0, 0.0, 0.0, 0.0],
        [0.8, 0.0, 0.0, 0.0, 0.0],
        [-1.6, 0.0, 0.0, 0.0, 0.0],
        [0.8, -0.9, 0.6, 0.1, 0.0],
    ]),
    B_u=np.array([[1.0], [0.0], [1.0], [-2.0], [0.0]]),
    B_y=np.array([
        [0.8, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.9, 0.6, 1.3],
    ]),
    D_uio=np.array([
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 2.0],
        [3.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
    ]),
    C=C,
)

PUBLISHED_INDEX = 3
HORIZON = 150
INPUT_AMPLITUDE = 5.0
DISTURBANCE_AMPLITUDE = 2.0
# monitoring runs: first disturbance channel in (-5, 5), second in (-2, 2)
MONITOR_DISTURBANCE_AMPLITUDES = (5.0, 2.0)


def system() -> SystemRealization:
    return SystemRealization(A=A.copy(), B=B.copy(), C=C.copy(), E=E.copy())


def fault_profile(k, k_f: int, profile: str = "max") -> np.ndarray:
    """Fault amplitude at times ``k`` for onset ``k_f``.

    ``"max"`` is the published formula ``max{0.1 + exp(-10/(k-k_f+1)), 0.9}``
    taken literally (a 0.9 step creeping up towards 1.1).  ``"min"`` swaps max
    for min, giving a ramp that saturates at 0.9.  ``"step"`` is a unit step.
    """
    k = np.asarray(k, dtype=float)
    j = np.maximum(k - k_f + 1, 1.0)
    ramp = 0.1 + np.exp(-10.0 / j)
    if profile == "max":
        val = np.maximum(ramp, 0.9)
    elif profile == "min":
        val = np.minimum(ramp, 0.9)
    elif profile == "step":
        val = np.ones_like(k)
    else:
        raise ValueError(f"unknown fault profile {profile!r}")
    return np.where(k >= k_f, val, 0.0)


def monitor_input(k) -> np.ndarray:
    return 0.9 * np.sin(0.4 * np.asarray(k, dtype=float) + 3.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    k_f: int
    k_id: int
    caption: str


SCENARIOS = {
    "a": Scenario("a", k_f=10, k_id=3, caption="3 = k_id <= k_f = 10"),
    "b": Scenario("b", k_f=1, k_id=3, caption="1 = k_f < k_id = 3"),
    # the fault time is not given for this case beyond k_f > k_N; 10 as in (a)
    "c": Scenario("c", k_f=10, k_id=1, caption="1 = k_id < k_0 = 3"),
    "d": Scenario("d", k_f=5, k_id=20, caption="5 = k_f < k_id = 20"),
}


def collect(seed: int = 0, T: int = HORIZON, sys: SystemRealization | None = None,
            input_amplitude: float = INPUT_AMPLITUDE,
            disturbance_amplitude: float = DISTURBANCE_AMPLITUDE,
            x0_amplitude: float = 1.0) -> SignalTrace:
    """Fault-free offline experiment with uniformly distributed excitation."""
    sys = sys or system()
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-x0_amplitude, x0_amplitude, sys.n)
    u = rng.uniform(-input_amplitude, input_amplitude, (T - 1, sys.m))
    d = rng.uniform(-disturbance_amplitude, disturbance_amplitude, (T - 1, sys.r))
    return simulate_plant(sys, x0, u, d, T=T)


def scenario_trace(scenario: Scenario | str, seed: int = 0, T: int = 60, profile: str = "max",
                   sys: SystemRealization | None = None) -> SignalTrace:
    """Monitoring run: sinusoidal input, random disturbance, fault from ``k_f``."""
    sc = SCENARIOS[scenario] if isinstance(scenario, str) else scenario
    sys = sys or system()
    rng = np.random.default_rng(seed)
    k = np.arange(T - 1)
    x0 = rng.uniform(-1.0, 1.0, sys.n)
    amps = np.resize(np.array(MONITOR_DISTURBANCE_AMPLITUDES), sys.r)
    d = rng.uniform(-1.0, 1.0, (T - 1, sys.r)) * amps
    u = np.tile(monitor_input(k)[:, None], (1, sys.m))
    f = np.tile(fault_profile(k, sc.k_f, profile)[:, None], (1, sys.m))
    tr = simulate_plant(sys, x0, u, d, f, T=T)
    tr.meta.update(scenario=sc.name, k_f=sc.k_f, k_id=sc.k_id, profile=profile, seed=seed)
    return tr


@dataclass
class ScenarioResult:
    scenario: Scenario
    k: np.ndarray
    f: np.ndarray
    fhat: np.ndarray
    fault_trace: fdi_runtime.FaultTrace

    def max_error_from(self, k0: int) -> float:
        sel = self.k >= k0
        return float(np.max(np.abs(self.f[sel] - self.fhat[sel]))) if sel.any() else 0.0


def run_scenario(uio: UioMatrices, scenario: Scenario | str, seed: int = 0, T: int = 60,
                 profile: str = "max", threshold: float = fdi_runtime.DEFAULT_THRESHOLD,
                 sys: SystemRealization | None = None, settle: bool = True,
                 tol: Tolerance = DEFAULT_TOL) -> ScenarioResult:
    sc = SCENARIOS[scenario] if isinstance(scenario, str) else scenario
    tr = scenario_trace(sc, seed, T, profile, sys)
    ft = fdi_runtime.monitor(uio, tr.u, tr.y, k_id=sc.k_id, threshold=threshold, window_N=3,
                             settle=settle, tol=tol)
    k = ft.estimate_times
    return ScenarioResult(scenario=sc, k=k, f=tr.f[k], fhat=ft.estimates, fault_trace=ft)


@dataclass
class Criterion:
    name: str
    passed: bool
    value: float | str
    limit: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.value} ({self.limit})"


@dataclass
class ReproductionReport:
    seed: int
    criteria: list[Criterion] = field(default_factory=list)
    solvable: bool = True
    uio: UioMatrices | None = None
    algorithm_trace: dd_design.AlgorithmOneTrace | None = None
    scenarios: dict[str, ScenarioResult] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.solvable and all(c.passed for c in self.criteria)

    def add(self, name, passed, value, limit):
        self.criteria.append(Criterion(name, bool(passed), value, limit))

    def summary(self) -> str:
        lines = [c.line() for c in self.criteria]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} (seed {self.seed}, {self.elapsed:.2f}s)")
        return "\n".join(lines)


def reproduce(seed: int = 0, T: int = HORIZON, profile: str = "max",
              sys: SystemRealization | None = None, tol: Tolerance = DEFAULT_TOL,
              validation_T: int = 60) -> ReproductionReport:
    """collect -> check -> design -> identify, checked against the hidden plant."""
    t0 = time.perf_counter()
    sys = sys or system()
    rep = ReproductionReport(seed=seed)

    res = mb_design.constraint_residuals(sys, PUBLISHED_UIO)
    ok, idx = is_nilpotent(PUBLISHED_UIO.A_uio, tol)
    rep.add("published UIO constraints", max(res.values()) < 1e-8, f"{max(res.values()):.2e}", "< 1e-8")
    rep.add("published A_UIO nilpotency index", ok and idx == PUBLISHED_INDEX, str(idx), f"== {PUBLISHED_INDEX}")

    trace = collect(seed, T, sys)
    dm = dd_design.build_data_matrices(trace, sys.r, tol)
    report = dd_design.check_dd_solvability(dm, tol, seed)
    rep.add("data solvability (ii-a, ii-b, richness)", report.overall,
            "; ".join(report.failures()) or "ok", "all hold")
    if not report.overall:
        rep.solvable = False
        rep.elapsed = time.perf_counter() - t0
        return rep

    try:
        uio, a1 = dd_design.run_algorithm_one(dm, tol, seed)
    except SolvabilityFailed:
        rep.solvable = False
        raise
    except DduioError as exc:
        rep.add("data-driven design", False, str(exc), "completes")
        rep.elapsed = time.perf_counter() - t0
        return rep
    rep.uio, rep.algorithm_trace = uio, a1

    res = mb_design.constraint_residuals(sys, uio)
    rep.add("designed UIO constraints vs hidden plant", max(res.values()) < 1e-8,
            f"{max(res.values()):.2e}", "< 1e-8")
    ok, idx = is_nilpotent(uio.A_uio, tol)
    rep.add("designed A_UIO nilpotent", ok, str(idx), f"index <= {sys.n}")
    rep.add("identified C", float(np.max(np.abs(uio.C - sys.C))) < 1e-8,
            f"{np.max(np.abs(uio.C - sys.C)):.2e}", "< 1e-8")

    # fault-free closed loop on a fresh trace
    rng = np.random.default_rng(seed + 1)
    val = simulate_plant(sys, rng.uniform(-1, 1, sys.n), monitor_input(np.arange(validation_T - 1))[:, None]
                         * np.ones((1, sys.m)),
                         rng.uniform(-1, 1, (validation_T - 1, sys.r)) * np.resize(
                             np.array(MONITOR_DISTURBANCE_AMPLITUDES), sys.r), T=validation_T)
    _, r = run_residual_generator(uio, val.u, val.y)
    tail = float(np.max(np.linalg.norm(r[sys.n :], axis=1)))
    rep.add(f"fault-free residual for k >= {sys.n}", tail < 1e-8, f"{tail:.2e}", "< 1e-8")

    for name, sc in SCENARIOS.items():
        out = run_scenario(uio, sc, seed, validation_T, profile, sys=sys, tol=tol)
        rep.scenarios[name] = out
        k0 = sc.k_id if name == "a" else sc.k_id + sys.n
        err = out.max_error_from(k0)
        k_star = out.fault_trace.detection_time
        rep.add(f"scenario ({name}) detection time K*", k_star == sc.k_f + 1, str(k_star), f"== {sc.k_f + 1}")
        rep.add(f"scenario ({name}) |fhat - f| for k >= {k0}", err < 1e-6, f"{err:.2e}", "< 1e-6")
    rep.elapsed = time.perf_counter() - t0
    return rep
