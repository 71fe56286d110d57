import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ddsel import bench, io
from ddsel.cli import (
    EXIT_INFEASIBLE,
    EXIT_NO_INCUMBENT,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    main,
    run,
)
from ddsel.exceptions import Infeasible, MalformedProblem


def _gen(tmp_path, **kw):
    args = {"n": 30, "p": 12, "k": 3, "snr": 10.0, "seed": 5}
    args.update(kw)
    out = tmp_path / "inst"
    rc = main(
        [
            "gen",
            "--out", str(out),
            "--n", str(args["n"]),
            "--p", str(args["p"]),
            "--k", str(args["k"]),
            "--snr", str(args["snr"]),
            "--seed", str(args["seed"]),
        ]
    )
    assert rc == EXIT_OK
    return out


def test_gen_writes_instance_dir(tmp_path, capsys):
    out = _gen(tmp_path)
    assert (out / "x.csv").exists()
    assert (out / "y.csv").exists()
    assert (out / "truth.json").exists()
    assert "reference_delta" in capsys.readouterr().out


def test_gen_round_trip_matches_generator(tmp_path):
    out = _gen(tmp_path, seed=9)
    back = io.load_instance(out)
    direct = bench.gen_type_synth(
        bench.SynthSpec(n=30, p=12, rho=0.0, k_star=3, snr=10.0, seed=9)
    )
    assert np.array_equal(back.design.entries, direct.design.entries)
    assert np.array_equal(back.response, direct.response)


def test_solve_ref_delta(tmp_path, capsys):
    out = _gen(tmp_path)
    res_file = tmp_path / "res.json"
    rc = main(
        ["solve", "--instance", str(out), "--delta", "ref",
         "--out", str(res_file)]
    )
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "optimal" in text
    record = io.load_json(res_file)
    assert record["status"] == "optimal"
    assert record["objective"] >= 1
    assert record["gap"] == 0.0


def test_solve_huge_delta_gives_empty_model(tmp_path, capsys):
    out = _gen(tmp_path)
    rc = main(["solve", "--instance", str(out), "--delta", "1e9"])
    assert rc == EXIT_OK
    assert "objective=0" in capsys.readouterr().out


def test_solve_ref_without_truth_is_usage_error(tmp_path, capsys):
    out = _gen(tmp_path)
    rc = main(
        ["solve", "--x", str(out / "x.csv"), "--y", str(out / "y.csv"),
         "--delta", "ref"]
    )
    assert rc == EXIT_USAGE
    assert "truth" in capsys.readouterr().err


def test_solve_negative_delta_is_usage_error(tmp_path):
    out = _gen(tmp_path)
    assert main(["solve", "--instance", str(out), "--delta", "-0.5"]) == EXIT_USAGE


def test_solve_missing_file_is_usage_error(tmp_path):
    rc = main(
        ["solve", "--x", str(tmp_path / "nope.csv"),
         "--y", str(tmp_path / "nope2.csv"), "--delta", "1.0"]
    )
    assert rc == EXIT_USAGE


def test_solve_l1_method(tmp_path, capsys):
    out = _gen(tmp_path)
    rc = main(
        ["solve", "--instance", str(out), "--delta", "ref", "--method", "l1"]
    )
    assert rc == EXIT_OK
    assert "l1:" in capsys.readouterr().out


def test_solve_limit_without_incumbent_exit_code(tmp_path, monkeypatch, capsys):
    # the search almost always rounds up some incumbent, so force the
    # empty-handed outcome to pin the exit-code mapping
    out = _gen(tmp_path)
    from ddsel import cli as cli_mod
    from ddsel.milo import MiloResult

    shell = MiloResult(
        incumbent=None, lower_bound=1.0, gap=float("inf"), nodes_explored=7,
        wall_time=0.01, status="node_limit", root_relaxation=None,
        progress=[], events=[], trace=None,
    )
    monkeypatch.setattr(
        cli_mod, "solve_with_intelligence", lambda *a, **kw: shell
    )
    rc = main(["solve", "--instance", str(out), "--delta", "ref",
               "--node-limit", "1"])
    assert rc == EXIT_NO_INCUMBENT
    assert "no incumbent" in capsys.readouterr().out


def test_run_maps_infeasible_to_exit_3(monkeypatch, capsys):
    cfg = RunConfig(command="solve", delta="1.0")
    from ddsel import cli as cli_mod

    def boom(_cfg):
        raise Infeasible("forced")

    monkeypatch.setitem(cli_mod._DISPATCH, "solve", boom)
    assert run(cfg) == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_path_command(tmp_path, capsys):
    out = _gen(tmp_path)
    pj = tmp_path / "path.json"
    pc = tmp_path / "prof.csv"
    rc = main(
        ["path", "--instance", str(out), "--num", "5",
         "--out", str(pj), "--profile-csv", str(pc)]
    )
    assert rc == EXIT_OK
    rec = io.load_json(pj)
    assert len(rec["grid"]) == 5
    assert rec["grid"] == sorted(rec["grid"], reverse=True)
    with open(pc, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(bench.PROFILE_HEADER)
    for row in rows[1:]:
        assert 1 <= int(row[1]) <= 12


def test_path_explicit_deltas(tmp_path, capsys):
    out = _gen(tmp_path)
    rc = main(
        ["path", "--instance", str(out), "--deltas", "0.5,0.25", "--method", "l1"]
    )
    assert rc == EXIT_OK
    assert "2 grid points" in capsys.readouterr().out


def test_path_bad_deltas_is_usage_error(tmp_path):
    out = _gen(tmp_path)
    assert main(["path", "--instance", str(out), "--deltas", "a,b"]) == EXIT_USAGE


def test_bounds_command(tmp_path, capsys):
    out = _gen(tmp_path)
    bj = tmp_path / "b.json"
    rc = main(
        ["bounds", "--instance", str(out), "--delta", "ref",
         "--mode", "refined", "--out", str(bj)]
    )
    assert rc == EXIT_OK
    rec = io.load_json(bj)
    bs = io.boundset_from_dict(rec)
    assert bs.coef_upper.shape == (12,)
    assert np.all(bs.coef_upper >= 0)


def test_bench_command_serial(tmp_path, capsys):
    mcsv = tmp_path / "m.csv"
    rc = main(
        ["bench", "--n", "30", "--p", "10", "--k", "2", "--replicates", "2",
         "--num", "3", "--seed", "2", "--estimators", "l0,l1",
         "--out", str(mcsv)]
    )
    assert rc == EXIT_OK
    with open(mcsv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["replicate", "seed"]
    # 2 replicates x 2 estimators x 3 grid points
    assert len(rows) == 1 + 2 * 2 * 3


def test_bench_workers_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--n", "25", "--p", "8", "--k", "2", "--replicates", "2",
            "--num", "2", "--seed", "4", "--estimators", "l0,l1"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b), "--workers", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_compare_command(tmp_path, capsys):
    out = _gen(tmp_path)
    mcsv = tmp_path / "cmp.csv"
    rc = main(
        ["compare", "--instance", str(out), "--num", "4",
         "--estimators", "l0,l1", "--out", str(mcsv)]
    )
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "estimator" in text and "l0" in text and "l1" in text
    with open(mcsv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(bench.METRICS_HEADER)
    assert len(rows) == 1 + 2 * 4


def test_compare_without_truth_is_usage_error(tmp_path):
    out = _gen(tmp_path)
    rc = main(
        ["compare", "--x", str(out / "x.csv"), "--y", str(out / "y.csv"),
         "--num", "3"]
    )
    assert rc == EXIT_USAGE


def test_runconfig_validation():
    with pytest.raises(MalformedProblem):
        RunConfig(command="solve", node_limit=0)
    with pytest.raises(MalformedProblem):
        RunConfig(command="solve", workers=0)
    with pytest.raises(MalformedProblem):
        RunConfig(command="solve", gap_limit=-0.1)


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "ddsel.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for name in ("gen", "solve", "path", "bounds", "bench", "compare"):
        assert name in proc.stdout


def test_unknown_subcommand_exits_2():
    proc = subprocess.run(
        [sys.executable, "-m", "ddsel.cli", "frobnicate"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2


def test_solve_log_file(tmp_path):
    out = _gen(tmp_path)
    log = tmp_path / "trace.log"
    rc = main(
        ["solve", "--instance", str(out), "--delta", "ref", "--log", str(log)]
    )
    assert rc == EXIT_OK
    assert log.exists()
