"""Command-line front end: ``dduio simulate | check | design | identify | reproduce-example``.

Exit codes: 0 success, 2 solvability failure, 3 schema or I/O error,
4 numerical-guarantee violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dd_design, benchmark, fdi_runtime, io, mb_design
from .errors import (
    DduioError,
    FaultyHistoricalData,
    HorizonTooShort,
    SchemaError,
    SolvabilityFailed,
)
from .lti_model import simulate_plant
from .numkit import Tolerance, is_nilpotent

EXIT_OK = 0
EXIT_UNSOLVABLE = 2
EXIT_SCHEMA = 3
EXIT_NUMERIC = 4

log = logging.getLogger("dduio")


def _tol(args) -> Tolerance:
    base = Tolerance()
    try:
        return Tolerance(
            rel_rank_tol=args.tol_rank if args.tol_rank is not None else base.rel_rank_tol,
            abs_zero_tol=args.tol_zero if args.tol_zero is not None else base.abs_zero_tol,
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _config(args) -> io.ExperimentConfig:
    cfg = io.load_config(args.config) if getattr(args, "config", None) else io.ExperimentConfig()
    for attr in ("seed", "horizon", "threshold", "k_id"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    return cfg


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    cfg = _config(args)
    sys_ = io.read_system(args.system) if args.system else benchmark.system()
    cfg.dims = dict(zip("nmpr", sys_.dims))
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    T = cfg.horizon
    x0 = rng.uniform(-cfg.x0_amplitude, cfg.x0_amplitude, sys_.n)
    u = rng.uniform(-cfg.input_amplitude, cfg.input_amplitude, (T - 1, sys_.m))
    d = rng.uniform(-cfg.disturbance_amplitude, cfg.disturbance_amplitude, (T - 1, sys_.r))
    f = None
    if args.with_fault:
        prof = benchmark.fault_profile(np.arange(T - 1), cfg.fault.onset, cfg.fault.profile)
        f = np.tile(prof[:, None], (1, sys_.m))
    trace = simulate_plant(sys_, x0, u, d, f, T=T)
    io.write_trace_csv(trace, args.output)
    print(f"wrote {T} samples (n={sys_.n}, m={sys_.m}, p={sys_.p}, r={sys_.r}) to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------- check

def _data(args, tol) -> dd_design.DataMatrices:
    trace = io.read_trace_csv(args.data)
    r = args.r
    if r is None:
        probe = dd_design.build_data_matrices(trace, 0, tol)
        r = dd_design.estimate_disturbance_dim([probe], tol)
        print(f"r not given; estimated from data: r = {r}")
    return dd_design.build_data_matrices(trace, r, tol)


def cmd_check(args) -> int:
    tol = _tol(args)
    dm = _data(args, tol)
    rep = dd_design.check_dd_solvability(dm, tol, seed=args.seed or 0)
    print(f"data: T={dm.T}, n={dm.n}, m={dm.m}, p={dm.p}, r={dm.r_claimed}")
    print(f"  richness  : {'ok' if rep.richness_ok else 'FAIL'} "
          f"(rank[U;X]={rep.rank_regressor}, excess={rep.rank_excess})")
    print(f"  ii-a      : {'ok' if rep.cond_iia else 'FAIL'} ({len(rep.tested_z)} points, "
          f"min rank {min(rep.ranks_iia)}, target {rep.target})")
    print(f"  ii-b      : {'ok' if rep.cond_iib else 'FAIL'} (rank[X_p;Y_f]={rep.rank_iib}, target {rep.target})")
    for line in rep.failures():
        print(f"  failure: {line}")
    print(f"solvable: {'yes' if rep.overall else 'no'}")
    if args.json:
        Path(args.json).write_text(json.dumps(rep.as_dict(), indent=2))
    return EXIT_OK if rep.overall else EXIT_UNSOLVABLE


# ---------------------------------------------------------------- design

def cmd_design(args) -> int:
    tol = _tol(args)
    dm = _data(args, tol)
    uio, a1 = dd_design.run_algorithm_one(dm, tol, seed=args.seed or 0)
    io.write_uio(args.output, uio, source=str(args.data), r=dm.r_claimed)
    ok, idx = is_nilpotent(uio.A_uio, tol)
    print(f"designed UIO written to {args.output}")
    print(f"  nilpotency index      : {idx}")
    print(f"  data identity residual: {a1.checks['data_identity']:.3e}")
    print(f"  X_E - T4 Y_E residual : {a1.checks['x_e_fit']:.3e}")
    print(f"  rank(T4)              : {a1.checks['rank_T4']}")
    if args.system:
        res = mb_design.constraint_residuals(io.read_system(args.system), uio)
        for k, v in res.items():
            print(f"  constraint {k:<11}: {v:.3e}")
    if args.diagnostics:
        checks = {k: float(v) for k, v in a1.checks.items()}
        io.write_matrices(args.diagnostics, a1.matrices(), kind="algorithm-trace", checks=checks)
        print(f"diagnostics written to {args.diagnostics}")
    return EXIT_OK


# ---------------------------------------------------------------- identify

def cmd_identify(args) -> int:
    tol = _tol(args)
    uio = io.read_uio(args.uio)
    if args.preset:
        sc = benchmark.SCENARIOS[args.preset]
        sys_ = io.read_system(args.system) if args.system else benchmark.system()
        trace = benchmark.scenario_trace(sc, seed=args.seed or 0, T=args.horizon or 60,
                                        profile=args.profile, sys=sys_)
        k_id = sc.k_id if args.k_id is None else args.k_id
        print(f"preset ({sc.name}): {sc.caption}")
    elif args.trace:
        trace = io.read_trace_csv(args.trace)
        k_id = args.k_id or 0
    else:
        raise SchemaError("identify needs a trace CSV or --preset")
    threshold = fdi_runtime.DEFAULT_THRESHOLD if args.threshold is None else args.threshold
    ft = fdi_runtime.monitor(uio, trace.u, trace.y, k_id=k_id, threshold=threshold,
                             window_N=args.window, settle=not args.no_settle, tol=tol)
    io.write_fault_trace(args.output, ft, f_true=trace.f)
    if ft.detection_time is None:
        print("no fault detected")
    else:
        print(f"fault detected at K* = {ft.detection_time}; fault time K*-1 = {ft.detection_time - 1}")
        if ft.window_estimate is not None:
            print(f"window estimate fhat_{ft.window_N}(K*-1) = {np.round(ft.window_estimate.ravel(), 10).tolist()}")
    if args.plot_data:
        k = ft.estimate_times
        io.write_plot_data(args.plot_data, k, trace.f[k], ft.estimates,
                           title="real and estimated fault")
    print(f"fault trace written to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------- reproduce-example

def _write_report(rep: benchmark.ReproductionReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(rep.summary() + "\n")
    if rep.uio is not None:
        io.write_uio(out / "uio.txt", rep.uio, seed=rep.seed)
        checks = {k: float(v) for k, v in rep.algorithm_trace.checks.items()}
        io.write_matrices(out / "algorithm_trace.txt", rep.algorithm_trace.matrices(),
                          kind="algorithm-trace", checks=checks)
    for name, res in rep.scenarios.items():
        io.write_plot_data(out / f"scenario_{name}.dat", res.k, res.f, res.fhat,
                           title=f"scenario ({name}): {res.scenario.caption}")


def cmd_reproduce_example(args) -> int:
    tol = _tol(args)
    sys_ = benchmark.system()
    if args.perturb == "zero-C":
        sys_ = type(sys_)(A=sys_.A, B=sys_.B, C=np.zeros_like(sys_.C), E=sys_.E)
    seeds = range(args.seed, args.seed + (args.sweep or 1))
    code = EXIT_OK
    for seed in seeds:
        rep = benchmark.reproduce(seed=seed, profile=args.profile, sys=sys_, tol=tol)
        print(rep.summary())
        if args.out_dir:
            _write_report(rep, Path(args.out_dir) / f"seed_{seed}" if args.sweep else Path(args.out_dir))
        if not rep.solvable:
            code = max(code, EXIT_UNSOLVABLE)
        elif not rep.passed:
            code = EXIT_NUMERIC
    return code


def cmd_export_example(args) -> int:
    io.write_system(args.output, benchmark.system(), name="benchmark")
    if args.uio:
        io.write_uio(args.uio, benchmark.PUBLISHED_UIO, name="published")
    if args.config:
        Path(args.config).write_text(io.dump_config(io.ExperimentConfig()))
    print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dduio", description=__doc__.splitlines()[0])
    ap.add_argument("--tol-rank", type=float, help="relative rank tolerance (default 1e-9)")
    ap.add_argument("--tol-zero", type=float, help="absolute zero tolerance (default 1e-8)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a fault-free (or faulty) experiment to a trace CSV")
    p.add_argument("--system", help="matrix bundle with A, B, C, E (default: benchmark plant)")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--with-fault", action="store_true", help="add the configured fault profile")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("check", cmd_check, "check solvability from a fault-free trace CSV"),
        ("design", cmd_design, "design a dead-beat UIO residual generator from data"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("data", help="trace CSV")
        p.add_argument("--r", type=int, help="disturbance dimension (estimated from data if omitted)")
        p.add_argument("--seed", type=int, help="seed for the random rank-test points")
        p.set_defaults(func=func)
        if name == "check":
            p.add_argument("--json", help="write the machine-readable report here")
        else:
            p.add_argument("-o", "--output", required=True, help="UIO matrix bundle")
            p.add_argument("--diagnostics", help="write the column-compression trace here")
            p.add_argument("--system", help="true plant, for oracle constraint residuals")

    p = sub.add_parser("identify", help="detect and estimate faults from a trace")
    p.add_argument("trace", nargs="?", help="trace CSV with u and y columns")
    p.add_argument("--uio", required=True)
    p.add_argument("--preset", choices=sorted(benchmark.SCENARIOS), help="benchmark scenario")
    p.add_argument("--system", help="plant for --preset (default: benchmark)")
    p.add_argument("--profile", default="max", choices=["max", "min", "step"])
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--k-id", type=int, dest="k_id")
    p.add_argument("--window", type=int, default=3, help="window length for the least-squares estimate")
    p.add_argument("--no-settle", action="store_true", help="plain estimator without settling injection")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plot-data")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("reproduce-example", help="run the benchmark end to end and grade it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", type=int, help="run this many consecutive seeds")
    p.add_argument("--profile", default="max", choices=["max", "min", "step"])
    p.add_argument("--perturb", choices=["none", "zero-C"], default="none")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_reproduce_example)

    p = sub.add_parser("export-example", help="write the benchmark plant (and optionally UIO, config)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--uio", help="also write the published UIO here")
    p.add_argument("--config", help="also write a default config here")
    p.set_defaults(func=cmd_export_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SchemaError, FaultyHistoricalData, HorizonTooShort, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SolvabilityFailed as exc:
        print(f"not solvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except DduioError as exc:
        print(f"numerical guarantee violated: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
