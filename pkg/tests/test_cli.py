import json
import subprocess
import sys

import pytest

from sensodim.cli import main


def only_run(out):
    (run,) = list(out.iterdir())
    return run


def test_simulate_then_estimate(tmp_path, capsys):
    assert main(["simulate", "--mode", "env", "--n-moves", "80", "--out", str(tmp_path)]) == 0
    run = only_run(tmp_path)
    assert {p.name for p in run.iterdir()} == {"variations.csv", "system.json"}
    capsys.readouterr()
    assert main(["estimate", str(run / "variations.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["method"] == "linear" and report["dimension"] == 6


def test_estimate_with_cca(tmp_path, capsys):
    main(["simulate", "--mode", "env", "--n-moves", "60", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["estimate", str(only_run(tmp_path) / "variations.csv"), "--method", "cca", "--pmax", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["diagnostics"]) == 3


def test_bootstrap_command(tmp_path, capsys):
    assert main(["bootstrap", "--mode", "agent", "--n-moves", "100", "--boot-iters", "3",
                 "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["linear_dimension"] == 9
    assert len(report["spreads"]) == 3
    assert (only_run(tmp_path) / "bootstrap_trace.csv").exists()


def test_experiment_summarize_plot(tmp_path, capsys):
    plan = tmp_path / "plan.yaml"
    plan.write_text("amplitudes: [1.0e-6]\nmethods: [linear]\ntrials: 5\n")
    out = tmp_path / "runs"
    assert main(["experiment", "--plan", str(plan), "--trials", "2", "--n-moves", "80", "--out", str(out)]) == 0
    run = only_run(out)
    names = {p.name for p in run.iterdir()}
    assert {"plan.json", "records.jsonl", "timings.csv", "summary.csv", "derived_d.csv", "summary.json",
            "performance_agent.csv", "performance_env.svg"} <= names
    assert json.loads((run / "plan.json").read_text())["trials"] == 2
    assert len((run / "records.jsonl").read_text().splitlines()) == 6

    capsys.readouterr()
    assert main(["summarize", str(run / "records.jsonl"), "--out", str(tmp_path / "s")]) == 0
    assert "100.0" in capsys.readouterr().out
    assert main(["plot-data", str(tmp_path / "s" / "summary.csv")]) == 0


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["simulate", "--mode", "sideways"],
                                  ["simulate", "--amplitude", "big"], ["estimate", "missing.csv"]])
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_runtime_errors_exit_2(tmp_path):
    assert main(["simulate", "--amplitude", "0", "--out", str(tmp_path)]) == 2
    empty = tmp_path / "summary.csv"
    empty.write_text("amplitude,mode,method,n,n_correct,percent_correct\n")
    assert main(["plot-data", str(empty)]) == 2
    bad_plan = tmp_path / "plan.json"
    bad_plan.write_text('{"trails": 2}')
    assert main(["experiment", "--plan", str(bad_plan), "--out", str(tmp_path)]) == 2


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0


def test_console_module_runs():
    res = subprocess.run([sys.executable, "-m", "sensodim.cli", "summarize", "nope.jsonl"],
                         capture_output=True, text=True)
    assert res.returncode == 1
    assert "error" in res.stderr
