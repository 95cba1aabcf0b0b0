import json

import numpy as np
import pytest

from cptport.cli import main
from cptport.core import CptParams, cpt_utility, pt_value
from cptport.data import load_returns_csv, synthetic_market, toy_returns, write_returns_csv
from cptport.oracle import grid_search

TIMING_KEYS = {"timings", "wall_time"}


def strip_timings(obj):
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


@pytest.fixture
def toy_csv(tmp_path):
    p = tmp_path / "toy.csv"
    write_returns_csv(p, toy_returns(0))
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_evaluate_zero_returns(tmp_path, capsys):
    p = tmp_path / "z.csv"
    write_returns_csv(p, np.zeros((5, 2)), ["a", "b"])
    out = tmp_path / "e.json"
    assert run("evaluate", "--returns", p, "--weights", "0.3,0.7", "--out", out) == 0
    assert json.loads(out.read_text())["utility"] == 0.0


def test_evaluate_single_asset_linear(tmp_path, capsys):
    R = np.random.default_rng(0).normal(0, 0.05, size=(40, 1))
    p = tmp_path / "one.csv"
    write_returns_csv(p, R, ["x"])
    out = tmp_path / "e.json"
    assert run("evaluate", "--returns", p, "--weights", "1", "--params", "8.4,11.4,1,1", "--out", out) == 0
    payload = json.loads(out.read_text())
    expect = np.mean(pt_value(R[:, 0], CptParams(8.4, 11.4, 1, 1)))
    assert payload["utility"] == pytest.approx(expect, abs=1e-12)
    printed = capsys.readouterr().out.splitlines()[0]
    assert float(printed.split(":")[1]) == payload["utility"]
    assert payload["n_pos"] + payload["n_neg"] == 40
    assert payload["schema_version"] == 1


def test_evaluate_errors(toy_csv, tmp_path, capsys):
    assert run("evaluate", "--returns", toy_csv, "--weights", "0.5,0.5") == 2
    assert run("evaluate", "--returns", tmp_path / "nope.csv", "--weights", "1") == 2
    assert run("evaluate", "--returns", toy_csv, "--weights", "1,1,x", "--params", "1,2") == 2
    err = capsys.readouterr().err
    assert "--params" in err and "--weights" in err


def test_optimize_grid_matches_oracle(toy_csv, tmp_path, params):
    out = tmp_path / "grid.json"
    assert run("optimize", "--returns", toy_csv, "--method", "grid", "--grid-step", 0.01, "--out", out) == 0
    payload = json.loads(out.read_text())
    g = grid_search(toy_returns(0).values, params, step=0.01)
    assert payload["records"][0]["weights"] == g.weights.tolist()
    assert payload["records"][0]["utility"] == g.utility
    assert payload["schema_version"] == 1
    assert payload["dataset"]["n_samples"] == 200
    assert (tmp_path / "grid_traces" / "start_0000.csv").exists()


def test_optimize_mm_deterministic(toy_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run("optimize", "--returns", toy_csv, "--method", "mm", "--starts", "equal", "--out", out) == 0
    assert strip_timings(json.loads(a.read_text())) == strip_timings(json.loads(b.read_text()))
    trace = (tmp_path / "a_traces" / "start_0000.csv").read_text().splitlines()
    assert trace[0] == "iteration,utility"


def test_optimize_ga_dirichlet(toy_csv, tmp_path):
    out = tmp_path / "ga.json"
    assert run("optimize", "--returns", toy_csv, "--method", "ga", "--starts", "dirichlet:100",
               "--steps", 200, "--seed", 7, "--out", out) == 0
    payload = json.loads(out.read_text())
    utils = [r["utility"] for r in payload["records"]]
    assert len(utils) == 100
    assert payload["best"]["utility"] == max(utils) >= np.median(utils)


def test_optimize_mv_start(toy_csv, tmp_path):
    out = tmp_path / "cc.json"
    assert run("optimize", "--returns", toy_csv, "--method", "cc", "--starts", "mv", "--out", out) == 0
    payload = json.loads(out.read_text())
    assert payload["records"][0]["start"] == payload["extra"]["mv"]["weights"]
    assert payload["best"]["utility"] >= payload["extra"]["mv"]["utility"] - 1e-12


def test_optimize_validation_lists_all_errors(toy_csv, capsys):
    code = run("optimize", "--returns", toy_csv, "--method", "ga-softmax", "--upper", 0.5,
               "--steps", 0, "--trust-radius", -1)
    assert code == 2
    err = capsys.readouterr().err
    assert "ga-softmax" in err and "steps" in err and "trust radius" in err


def test_threads_env(toy_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("CPTPORT_THREADS", "2")
    out = tmp_path / "t.json"
    assert run("optimize", "--returns", toy_csv, "--method", "ga", "--starts", "dirichlet:4",
               "--steps", 20, "--out", out) == 0
    assert json.loads(out.read_text())["config"]["threads"] == 2
    monkeypatch.setenv("CPTPORT_THREADS", "many")
    assert run("optimize", "--returns", toy_csv, "--method", "ga", "--out", out) == 2


def test_synth(tmp_path):
    src = tmp_path / "m.csv"
    write_returns_csv(src, synthetic_market(60, 4, seed=1))
    one = tmp_path / "one.csv"
    assert run("synth", "--returns", src, "--factor", 1, "--out", one) == 0
    assert np.array_equal(load_returns_csv(one).values, load_returns_csv(src).values)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("synth", "--returns", src, "--factor", 10, "--seed", 3, "--out", out) == 0
    R = load_returns_csv(a)
    assert R.values.shape == (600, 4)
    assert np.array_equal(R.values[:60], load_returns_csv(src).values)
    assert a.read_bytes() == b.read_bytes()
    assert run("synth", "--returns", src, "--factor", 0, "--out", a) == 2


def test_report_single_method(toy_csv, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run("report", "--returns", toy_csv, "--methods", "mm", "--out", out) == 0
    rows = json.loads(out.read_text())["rows"]
    assert [r["start"] for r in rows] == ["equal", "mv"]
    assert "method" in capsys.readouterr().out


def test_report_consistency(toy_csv, tmp_path, params):
    out = tmp_path / "r.json"
    assert run("report", "--returns", toy_csv, "--methods", "mv,mm,cc,ga", "--out", out) == 0
    payload = json.loads(out.read_text())
    R = toy_returns(0).values
    iterative = [r["utility"] for r in payload["rows"] if r["method"] in ("mm", "cc", "ga")]
    assert max(iterative) - min(iterative) <= 2e-3
    for row in payload["rows"]:
        assert row["utility"] == pytest.approx(cpt_utility(np.array(row["weights"]), R, params), abs=1e-10)


def test_report_errors(toy_csv, capsys):
    assert run("report", "--returns", toy_csv, "--methods", "mm,bogus") == 2
    assert "bogus" in capsys.readouterr().err
