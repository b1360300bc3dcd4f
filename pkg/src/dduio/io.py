"""File formats: trace CSV, matrix bundles, fault-trace CSV, plot data, config.

Trace CSV
    header ``k,u_0..u_{m-1},d_0..d_{r-1},f_0..f_{m-1},x_0..x_{n-1},y_0..y_{p-1}``,
    one row per sample k = 0..T-1.  The last row leaves the u/d/f cells empty.
    Missing d or f columns read as zero.

Matrix bundle
    plain text; each matrix is a line ``# {"name": ..., "rows": ..., "cols": ...}``
    followed by ``rows`` comma-separated lines.  The first line is a file header
    ``# {"format": "dduio-matrices", "version": 1, ...}``.

Config (YAML, ``version: 1``)
    see :class:`ExperimentConfig`.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import HorizonTooShort, SchemaError
from .lti_model import SignalTrace, SystemRealization, UioMatrices
from .numkit import Tolerance

MATRIX_FORMAT = "dduio-matrices"
FORMAT_VERSION = 1
CONFIG_VERSION = 1

_COLUMN = re.compile(r"^([udfxy])_(\d+)$")


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------- traces

def trace_header(n: int, m: int, p: int, r: int) -> list[str]:
    cols = ["k"]
    for prefix, width in (("u", m), ("d", r), ("f", m), ("x", n), ("y", p)):
        cols += [f"{prefix}_{i}" for i in range(width)]
    return cols


def write_trace_csv(trace: SignalTrace, path) -> None:
    n, m, p, r = trace.dims
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(n, m, p, r))
    for k in range(trace.T):
        if k < trace.T - 1:
            inputs = [*trace.u[k], *trace.d[k], *trace.f[k]]
            inputs = [_fmt(v) for v in inputs]
        else:
            inputs = [""] * (2 * m + r)
        w.writerow([k, *inputs, *(_fmt(v) for v in trace.x[k]), *(_fmt(v) for v in trace.y[k])])
    Path(path).write_text(buf.getvalue())


def read_trace_csv(path) -> SignalTrace:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    rows = [row for row in rows if row]
    if not rows or rows[0][0].strip() != "k":
        raise SchemaError(f"{path}: first column of the header must be 'k'")
    header = [h.strip() for h in rows[0]]
    groups: dict[str, list[tuple[int, int]]] = {c: [] for c in "udfxy"}
    for pos, name in enumerate(header[1:], start=1):
        match = _COLUMN.match(name)
        if not match:
            raise SchemaError(f"{path}: unrecognised column {name!r}")
        groups[match.group(1)].append((int(match.group(2)), pos))
    for prefix, cols in groups.items():
        if sorted(i for i, _ in cols) != list(range(len(cols))):
            raise SchemaError(f"{path}: {prefix}_* columns must be numbered 0..{len(cols) - 1}")
        cols.sort()
    if not groups["x"] or not groups["y"]:
        raise SchemaError(f"{path}: x_* and y_* columns are required")
    if groups["f"] and len(groups["f"]) != len(groups["u"]):
        raise SchemaError(f"{path}: f_* columns must match u_* columns")

    body = rows[1:]
    T = len(body)
    if T < 2:
        raise SchemaError(f"{path}: need at least two samples, got {T}")

    def block(prefix: str, nrows: int) -> np.ndarray:
        cols = groups[prefix]
        out = np.zeros((nrows, len(cols)))
        for k in range(nrows):
            for j, (_, pos) in enumerate(cols):
                cell = body[k][pos].strip()
                try:
                    out[k, j] = float(cell)
                except ValueError as exc:
                    raise SchemaError(f"{path}: bad value {cell!r} in column {header[pos]} at k={k}") from exc
        return out

    for k, row in enumerate(body):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {k + 1} has {len(row)} fields, header has {len(header)}")
        try:
            kk = int(row[0])
        except ValueError as exc:
            raise SchemaError(f"{path}: bad time index {row[0]!r}") from exc
        if kk != k:
            raise SchemaError(f"{path}: time index must run 0..T-1, found {kk} at row {k + 1}")

    x = block("x", T)
    y = block("y", T)
    u = block("u", T - 1)
    d = block("d", T - 1)
    f = block("f", T - 1) if groups["f"] else np.zeros((T - 1, u.shape[1]))
    return SignalTrace(u=u, d=d, f=f, x=x, y=y)


# ---------------------------------------------------------------- matrices

def write_matrices(path, matrices: dict[str, np.ndarray], **meta) -> None:
    lines = ["# " + json.dumps({"format": MATRIX_FORMAT, "version": FORMAT_VERSION, **meta})]
    for name, M in matrices.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        lines.append("# " + json.dumps({"name": name, "rows": M.shape[0], "cols": M.shape[1]}))
        lines += [",".join(_fmt(v) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrices(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(f"{path}: missing matrix-bundle header")
    try:
        meta = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: bad header: {exc}") from exc
    if meta.get("format") != MATRIX_FORMAT:
        raise SchemaError(f"{path}: not a {MATRIX_FORMAT} file")
    out: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if not line.startswith("#"):
            raise SchemaError(f"{path}: expected a matrix header at line {i + 1}")
        try:
            head = json.loads(line[1:])
            name, rows, cols = head["name"], int(head["rows"]), int(head["cols"])
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise SchemaError(f"{path}: bad matrix header at line {i + 1}") from exc
        body = lines[i + 1 : i + 1 + rows]
        if len(body) != rows:
            raise SchemaError(f"{path}: matrix {name} is truncated")
        try:
            M = np.array([[float(v) for v in row.split(",")] if cols else [] for row in body], dtype=float)
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric entry in matrix {name}") from exc
        M = M.reshape(rows, cols)
        out[name] = M
        i += 1 + rows
    return out, meta


def write_uio(path, uio: UioMatrices, **meta) -> None:
    write_matrices(path, {"A_uio": uio.A_uio, "B_u": uio.B_u, "B_y": uio.B_y,
                          "D_uio": uio.D_uio, "C": uio.C}, kind="uio", **meta)


def read_uio(path) -> UioMatrices:
    mats, _ = read_matrices(path)
    try:
        return UioMatrices(**{k: mats[k] for k in ("A_uio", "B_u", "B_y", "D_uio", "C")})
    except KeyError as exc:
        raise SchemaError(f"{path}: missing matrix {exc}") from exc


def write_system(path, sys: SystemRealization, **meta) -> None:
    write_matrices(path, {"A": sys.A, "B": sys.B, "C": sys.C, "E": sys.E}, kind="system", **meta)


def read_system(path) -> SystemRealization:
    mats, _ = read_matrices(path)
    try:
        return SystemRealization(**{k: mats[k] for k in ("A", "B", "C", "E")})
    except KeyError as exc:
        raise SchemaError(f"{path}: missing matrix {exc}") from exc


# ---------------------------------------------------------------- monitoring output

def write_fault_trace(path, ft, f_true=None) -> None:
    """One row per residual sample: residual, its norm, detection flag, estimate."""
    res = ft.residuals
    p = res.shape[1]
    m = ft.estimates.shape[1] if ft.estimates.size else (f_true.shape[1] if f_true is not None else 0)
    cols = ["k", *(f"r_{i}" for i in range(p)), "r_norm", "detected",
            *(f"fhat_{i}" for i in range(m))]
    if f_true is not None:
        cols += [f"f_{i}" for i in range(m)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    est = {int(k): row for k, row in zip(ft.estimate_times, ft.estimates)}
    for k in range(len(res)):
        detected = int(ft.detection_time is not None and k >= ft.detection_time)
        fhat = [_fmt(v) for v in est[k]] if k in est else [""] * m
        row = [k, *(_fmt(v) for v in res[k]), _fmt(np.linalg.norm(res[k])), detected, *fhat]
        if f_true is not None:
            row += [_fmt(v) for v in f_true[k]] if k < len(f_true) else [""] * m
        w.writerow(row)
    Path(path).write_text(buf.getvalue())


def write_plot_data(path, k, f, fhat, title: str = "") -> None:
    """Whitespace-separated columns ``k f_0.. fhat_0..`` for plotting real vs estimated fault."""
    f = np.asarray(f).reshape(len(k), -1)
    fhat = np.asarray(fhat).reshape(len(k), -1)
    m = f.shape[1]
    head = ["k", *(f"f_{i}" for i in range(m)), *(f"fhat_{i}" for i in range(m))]
    lines = [f"# {title}"] if title else []
    lines.append(" ".join(head))
    for kk, fr, er in zip(k, f, fhat):
        lines.append(" ".join([str(int(kk)), *(_fmt(v) for v in fr), *(_fmt(v) for v in er)]))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- config

@dataclass
class FaultSpec:
    onset: int = 10
    profile: str = "max"


@dataclass
class ExperimentConfig:
    """Experiment settings; defaults reproduce the five-state benchmark."""

    dims: dict = field(default_factory=lambda: {"n": 5, "m": 1, "p": 3, "r": 2})
    horizon: int = 150
    seed: int = 0
    input_amplitude: float = 5.0
    disturbance_amplitude: float = 2.0
    x0_amplitude: float = 1.0
    fault: FaultSpec = field(default_factory=FaultSpec)
    k_id: int = 3
    threshold: float = 1e-9
    tolerance: dict = field(default_factory=dict)
    version: int = CONFIG_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.version != CONFIG_VERSION:
            raise SchemaError(f"unsupported config version {self.version}")
        n, m, p, r = (int(self.dims.get(k, -1)) for k in ("n", "m", "p", "r"))
        if min(n, m, p) < 1 or r < 0:
            raise SchemaError(f"dims must be positive (r may be 0), got {self.dims}")
        if self.horizon <= n + m + r + 1:
            raise HorizonTooShort(f"horizon T={self.horizon} must exceed n+m+r+1 = {n + m + r + 1}")
        if self.threshold < 0:
            raise SchemaError("threshold must be nonnegative")
        self.tol()
        return self

    def tol(self) -> Tolerance:
        try:
            return Tolerance(**self.tolerance)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad tolerance overrides {self.tolerance}: {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        fault = data.pop("fault", {}) or {}
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data, fault=FaultSpec(**fault))
        except TypeError as exc:
            raise SchemaError(f"bad config: {exc}") from exc
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise SchemaError(f"{path}: config must be a mapping")
    return ExperimentConfig.from_dict(data or {})


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
