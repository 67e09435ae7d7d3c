import json

import pytest

from adacsl import tree
from adacsl.cli import run


def test_usage_error_returns_two(capsys):
    assert run([]) == 2
    assert run(["fit", "--synthetic", "running-example"]) == 2


def test_missing_data_file(tmp_path, capsys):
    code = run(["fit", "--data", str(tmp_path / "nope.csv"), "--ingest", "x",
                "--out", str(tmp_path / "m.json")])
    assert code == 1
    assert "nope.csv" in capsys.readouterr().err


def test_ingest_check(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("a,b,y\n1,x,1\n2,y,0\n3,x,0\n")
    cfg = tmp_path / "d.ingest"
    cfg.write_text("label_column=y\npositive_value=1\n")
    assert run(["ingest-check", "--data", str(data), "--ingest", str(cfg)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"n": 3, "k": 3, "n_pos": 1, "features": ["a", "b=x", "b=y"]}


def test_fit_adaptive_evaluate_roc(tmp_path, capsys):
    model = tmp_path / "m.json"
    trace = tmp_path / "t.csv"
    common = ["--synthetic", "running-example", "--c-fn", "19", "--c-fp", "1", "--seed", "3"]
    assert run(["fit-adaptive", *common, "--max-depth", "1", "--budget", "100",
                "--out", str(model), "--trace", str(trace)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_positive"] == 100 and summary["cost"] <= 1200
    assert trace.read_text().startswith("iteration,c10,tau,tau_d,train_cost,n_positive\n")
    tree.load(model.read_text())

    scores = tmp_path / "s.csv"
    assert run(["evaluate", *common, "--model", str(model), "--budget-frac", "0.5",
                "--out", str(scores)]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["budget"] == 50 and ev["n_positive"] == 50
    assert len(scores.read_text().splitlines()) == 1001

    curve, lines = tmp_path / "c.csv", tmp_path / "l.csv"
    assert run(["roc", *common, "--model", str(model), "--budget", "100",
                "--out", str(curve), "--lines", str(lines)]) == 0
    assert curve.read_text().splitlines()[0] == "series,fpr,tpr"
    names = [l.split(",")[0] for l in lines.read_text().splitlines()[1:]]
    assert names == ["model:iso-optimal", "model:iso-feasible", "constraint", "iso-minimum"]


def test_fit_and_reduce(tmp_path):
    out = tmp_path / "m.json"
    assert run(["fit", "--synthetic", "running-example", "--plain", "--out", str(out)]) == 0
    assert tree.load(out.read_text()).train_costs.c10 == 1.0
    red = tmp_path / "r.csv"
    assert run(["reduce-features", "--synthetic", "running-example", "--keep", "0.5",
                "--out", str(red)]) == 0
    assert red.read_text().splitlines()[0] == "f2,label"


def test_non_convergence_exit_code(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    code = run(["fit-adaptive", "--synthetic", "running-example", "--c-fn", "19",
                "--max-depth", "1", "--budget", "100", "--max-iterations", "2",
                "--out", str(tmp_path / "m.json"), "--trace", str(trace)])
    assert code == 1
    assert len(trace.read_text().splitlines()) == 3


def test_bad_budget_fraction(tmp_path):
    assert run(["evaluate", "--synthetic", "running-example", "--model", str(tmp_path / "x"),
                "--budget-frac", "2"]) == 1


def test_seed_env_var_determinism(tmp_path, monkeypatch):
    outs = []
    for i in range(2):
        monkeypatch.setenv("ADACSL_SEED", "7")
        p = tmp_path / f"m{i}.json"
        assert run(["fit-adaptive", "--synthetic", "hard", "--budget-frac", "0.3",
                    "--max-depth", "3", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["metadata"]["seed"] == 7


def test_sweep_command(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("budget_fractions=0.5\nrepeats=1\ngrid.max_depth=2\nc_fn=19\n")
    out, agg = tmp_path / "r.csv", tmp_path / "a.csv"
    assert run(["sweep", "--synthetic", "running-example", "--config", str(cfg),
                "--out", str(out), "--aggregate", str(agg), "--jobs", "1"]) == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 3
    assert len(agg.read_text().splitlines()) == 1 + 3
