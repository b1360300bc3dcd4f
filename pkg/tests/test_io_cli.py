import json

import numpy as np
import pytest

from dduio import cli, benchmark, io, mb_design
from dduio.errors import HorizonTooShort, SchemaError
from dduio.lti_model import simulate_plant


@pytest.fixture
def tmp(tmp_path):
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_trace_round_trip(tmp, bench_trace):
    path = tmp / "t.csv"
    io.write_trace_csv(bench_trace, path)
    back = io.read_trace_csv(path)
    for name in ("u", "d", "f", "x", "y"):
        np.testing.assert_allclose(getattr(back, name), getattr(bench_trace, name), rtol=0, atol=1e-12)
    io.write_trace_csv(back, tmp / "t2.csv")
    assert (tmp / "t2.csv").read_bytes() == path.read_bytes()


def test_trace_header_layout(tmp, bench_trace):
    io.write_trace_csv(bench_trace, tmp / "t.csv")
    head = (tmp / "t.csv").read_text().splitlines()[0]
    assert head == "k,u_0,d_0,d_1,f_0,x_0,x_1,x_2,x_3,x_4,y_0,y_1,y_2"


def test_missing_disturbance_and_fault_columns(tmp):
    (tmp / "t.csv").write_text("k,u_0,x_0,y_0\n0,1.0,0.0,0.0\n1,2.0,1.0,1.0\n2,,3.0,3.0\n")
    tr = io.read_trace_csv(tmp / "t.csv")
    assert tr.d.shape == (2, 0) and tr.f.shape == (2, 1) and not tr.f.any()
    assert tr.u.ravel().tolist() == [1.0, 2.0]


@pytest.mark.parametrize("text", [
    "",
    "x_0,y_0\n1,2\n",
    "k,u_0,x_0,y_0\n0,1.0,0.0,0.0\n1,2.0,1.0\n",
    "k,u_0,x_0,y_0\n0,1.0,0.0,0.0\n2,2.0,1.0,1.0\n",
    "k,u_0,x_0,y_0\n0,abc,0.0,0.0\n1,,1.0,1.0\n",
    "k,u_0,w_0,y_0\n0,1.0,0.0,0.0\n1,,1.0,1.0\n",
    "k,u_0,x_1,y_0\n0,1.0,0.0,0.0\n1,,1.0,1.0\n",
    "k,u_0,x_0,y_0\n0,1.0,0.0,0.0\n",
])
def test_malformed_trace(tmp, text):
    (tmp / "t.csv").write_text(text)
    with pytest.raises(SchemaError):
        io.read_trace_csv(tmp / "t.csv")


def test_missing_file_is_schema_error(tmp):
    with pytest.raises(SchemaError):
        io.read_trace_csv(tmp / "nope.csv")


def test_matrix_bundle_round_trip(tmp, bench_sys, published_uio):
    io.write_uio(tmp / "u.txt", published_uio, note="x")
    back = io.read_uio(tmp / "u.txt")
    for name in ("A_uio", "B_u", "B_y", "D_uio", "C"):
        np.testing.assert_array_equal(getattr(back, name), getattr(published_uio, name))
    _, meta = io.read_matrices(tmp / "u.txt")
    assert meta["kind"] == "uio" and meta["note"] == "x" and meta["version"] == 1
    io.write_system(tmp / "s.txt", bench_sys)
    assert io.read_system(tmp / "s.txt").dims == (5, 1, 3, 2)
    io.write_matrices(tmp / "e.txt", {"Z": np.zeros((3, 0))})
    assert io.read_matrices(tmp / "e.txt")[0]["Z"].shape == (3, 0)


def test_matrix_bundle_errors(tmp, published_uio):
    (tmp / "bad.txt").write_text("1,2\n")
    with pytest.raises(SchemaError):
        io.read_matrices(tmp / "bad.txt")
    io.write_uio(tmp / "u.txt", published_uio)
    lines = (tmp / "u.txt").read_text().splitlines()
    (tmp / "cut.txt").write_text("\n".join(lines[:4]) + "\n")
    with pytest.raises(SchemaError):
        io.read_uio(tmp / "cut.txt")
    io.write_matrices(tmp / "partial.txt", {"A_uio": np.zeros((2, 2))})
    with pytest.raises(SchemaError):
        io.read_uio(tmp / "partial.txt")


def test_config_round_trip_and_validation(tmp):
    cfg = io.ExperimentConfig()
    (tmp / "c.yaml").write_text(io.dump_config(cfg))
    back = io.load_config(tmp / "c.yaml").validate()
    assert back == cfg and back.fault.onset == 10
    with pytest.raises(HorizonTooShort):
        io.ExperimentConfig(horizon=0).validate()
    with pytest.raises(SchemaError):
        io.ExperimentConfig.from_dict({"colour": "red"})
    with pytest.raises(SchemaError):
        io.ExperimentConfig(version=2).validate()
    with pytest.raises(SchemaError):
        io.ExperimentConfig(tolerance={"rel_rank_tol": 2.0}).validate()
    (tmp / "bad.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(SchemaError):
        io.load_config(tmp / "bad.yaml")


def test_cli_simulate_is_deterministic(tmp):
    assert run("simulate", "--seed", 4, "-o", tmp / "a.csv") == 0
    assert run("simulate", "--seed", 4, "-o", tmp / "b.csv") == 0
    assert (tmp / "a.csv").read_bytes() == (tmp / "b.csv").read_bytes()
    assert len((tmp / "a.csv").read_text().splitlines()) == 151
    assert run("simulate", "--seed", 5, "-o", tmp / "c.csv") == 0
    assert (tmp / "a.csv").read_bytes() != (tmp / "c.csv").read_bytes()


def test_cli_simulate_zero_horizon(tmp):
    assert run("simulate", "--horizon", 0, "-o", tmp / "a.csv") == cli.EXIT_SCHEMA


def test_cli_simulate_with_config_and_fault(tmp):
    cfg = io.ExperimentConfig(horizon=40)
    cfg.fault.onset = 7
    (tmp / "c.yaml").write_text(io.dump_config(cfg))
    assert run("simulate", "--config", tmp / "c.yaml", "--with-fault", "-o", tmp / "f.csv") == 0
    tr = io.read_trace_csv(tmp / "f.csv")
    assert tr.T == 40 and not tr.f[:7].any() and tr.f[7, 0] == pytest.approx(0.9)


def test_cli_check_design_identify(tmp, capsys):
    assert run("simulate", "-o", tmp / "d.csv") == 0
    assert run("check", tmp / "d.csv", "--json", tmp / "r.json") == 0
    rep = json.loads((tmp / "r.json").read_text())
    assert rep["overall"] and rep["r_claimed"] == 2
    run("export-example", "-o", tmp / "sys.txt")
    assert run("design", tmp / "d.csv", "--r", 2, "-o", tmp / "u.txt",
               "--diagnostics", tmp / "diag.txt", "--system", tmp / "sys.txt") == 0
    uio = io.read_uio(tmp / "u.txt")
    assert mb_design.satisfies_constraints(benchmark.system(), uio)
    mats, meta = io.read_matrices(tmp / "diag.txt")
    assert mats["S"].shape == (149, 149) and meta["checks"]["data_identity"] < 1e-8
    capsys.readouterr()
    assert run("identify", "--uio", tmp / "u.txt", "--preset", "a", "-o", tmp / "ft.csv",
               "--plot-data", tmp / "a.dat") == 0
    out = capsys.readouterr().out
    assert "K* = 11" in out
    rows = [line.split() for line in (tmp / "a.dat").read_text().splitlines()[2:]]
    err = max(abs(float(f) - float(fh)) for _, f, fh in rows)
    assert err < 1e-6 and rows[0][0] == "3"


def test_cli_identify_from_trace(tmp, published_uio):
    io.write_uio(tmp / "u.txt", published_uio)
    tr = benchmark.scenario_trace("a", seed=2)
    io.write_trace_csv(tr, tmp / "t.csv")
    assert run("identify", tmp / "t.csv", "--uio", tmp / "u.txt", "--k-id", 3, "-o", tmp / "ft.csv") == 0
    lines = (tmp / "ft.csv").read_text().splitlines()
    assert lines[0].startswith("k,r_0,r_1,r_2,r_norm,detected,fhat_0,f_0")
    flags = [int(line.split(",")[5]) for line in lines[1:]]
    assert flags.index(1) == 11
    assert run("identify", "--uio", tmp / "u.txt", "-o", tmp / "x.csv") == cli.EXIT_SCHEMA


def test_cli_check_exit_codes(tmp, bench_sys):
    rng = np.random.default_rng(0)
    calm = simulate_plant(bench_sys, rng.uniform(-1, 1, 5), np.zeros((149, 1)), rng.uniform(-2, 2, (149, 2)), T=150)
    io.write_trace_csv(calm, tmp / "calm.csv")
    assert run("check", tmp / "calm.csv", "--r", 2) == cli.EXIT_UNSOLVABLE
    assert run("design", tmp / "calm.csv", "--r", 2, "-o", tmp / "u.txt") == cli.EXIT_UNSOLVABLE
    io.write_trace_csv(benchmark.collect(), tmp / "d.csv")
    text = (tmp / "d.csv").read_text().splitlines()
    (tmp / "cut.csv").write_text("\n".join(text[:50] + [text[50][:20]]) + "\n")
    assert run("check", tmp / "cut.csv") == cli.EXIT_SCHEMA
    assert run("check", tmp / "missing.csv") == cli.EXIT_SCHEMA
    assert run("--tol-rank", 5, "check", tmp / "d.csv") == cli.EXIT_SCHEMA


def test_cli_faulty_history_is_rejected(tmp):
    assert run("simulate", "--with-fault", "-o", tmp / "f.csv") == 0
    assert run("check", tmp / "f.csv", "--r", 2) == cli.EXIT_SCHEMA


def test_cli_reproduce(tmp, capsys):
    assert run("reproduce-example", "--out-dir", tmp / "rep") == 0
    out = capsys.readouterr().out
    assert "overall: PASS" in out and "[FAIL]" not in out
    assert (tmp / "rep" / "summary.txt").exists()
    for name in "abcd":
        assert (tmp / "rep" / f"scenario_{name}.dat").exists()


def test_cli_reproduce_zero_output_map(capsys):
    assert run("reproduce-example", "--perturb", "zero-C") == cli.EXIT_UNSOLVABLE
    assert "data solvability" in capsys.readouterr().out


def test_cli_reproduce_sweep(tmp):
    assert run("reproduce-example", "--sweep", 10, "--out-dir", tmp / "sw") == 0
    assert len(list((tmp / "sw").glob("seed_*/summary.txt"))) == 10


@pytest.mark.parametrize("profile", ["min", "step"])
def test_cli_reproduce_profiles(profile):
    assert run("reproduce-example", "--profile", profile) == 0
