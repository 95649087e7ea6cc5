import json

import numpy as np
import pytest

from nces_formation.cli import main
from nces_formation.io import TRAJECTORY_COLUMNS, TraceFormatError, read_csv, write_trace
from nces_formation.plotting import plot_trace, render
from nces_formation.rollout import run_episode
from nces_formation.scenarios import get_scenario


@pytest.fixture(scope="module")
def failure_trace(tmp_path_factory):
    spec = get_scenario("node-failure")
    trace, _ = run_episode(spec, np.zeros((6, 112)))
    out = tmp_path_factory.mktemp("trace")
    write_trace(trace, out, {"note": "zero policy"})
    (out / "scenario.toml").write_text(spec.to_toml())
    return trace, out


def test_trace_files_roundtrip(failure_trace):
    trace, out = failure_trace
    traj = read_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS)
    assert len(traj["id"]) == 200 * 6 + 200 * 4  # failed agents drop out of the file
    first = traj["x"][traj["id"] == 3][0]
    assert first == trace.states[0][2, 0]  # exact float round trip
    events = json.loads((out / "events.json").read_text())
    assert {"failure", "head_change", "topology"} <= {e["kind"] for e in events}


def test_read_csv_errors(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("")
    with pytest.raises(TraceFormatError):
        read_csv(p, ["a"])
    p.write_text("a,b\n")
    with pytest.raises(TraceFormatError):
        read_csv(p, ["a"])
    p.write_text("a\n1\n")
    with pytest.raises(TraceFormatError):
        read_csv(p, ["a", "b"])


def test_plots(failure_trace, tmp_path):
    _, out = failure_trace
    docs = render(out)
    assert set(docs) == {"trajectory.svg", "error.svg", "speed.svg", "heading.svg"}
    assert 'class="failure"' in docs["trajectory.svg"]
    assert 'class="reference"' in docs["error.svg"]
    paths = plot_trace(out, tmp_path)
    assert all(p.exists() and p.read_text().startswith("<svg") for p in paths)


def test_plot_missing_input(tmp_path):
    with pytest.raises(TraceFormatError):
        render(tmp_path)


def test_switch_plot_draws_walls(tmp_path):
    spec = get_scenario("switch-formation")
    trace, _ = run_episode(spec, np.zeros((5, 128)))
    write_trace(trace, tmp_path)
    (tmp_path / "scenario.toml").write_text(spec.to_toml())
    assert render(tmp_path)["trajectory.svg"].count('class="wall"') == 4


def test_cli_inspect_topology(capsys):
    assert main(["inspect-topology", "--n", "5", "--l-f", "0.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["adjacency"][1] == [1, 0, 1, 0, 0]
    assert doc["degrees"] == [4, 2, 3, 3, 2]
    assert doc["spanning_tree"] is True


def test_cli_list_and_export(capsys, tmp_path):
    assert main(["list-scenarios"]) == 0
    assert "node-failure" in capsys.readouterr().out
    path = tmp_path / "s.toml"
    assert main(["export-scenario", "basic-linear", "--out", str(path)]) == 0
    assert main(["inspect-topology", "--scenario", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["head"] == 1


def test_cli_train_eval_plot(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NCES_FORMATION_OUT", str(tmp_path / "envroot"))
    cfg = tmp_path / "run.toml"
    cfg.write_text('iterations = 50\nmonitor_every = 1\n[evolution]\nsigma = 0.1\n[constraint]\naggregation = "max"\n')
    assert main(["train", "--scenario", "basic-linear", "--config", str(cfg), "--seed", "4", "--iters", "3"]) == 0
    run = tmp_path / "envroot" / "runs" / "basic-linear-seed4"
    summary = json.loads((run / "summary.json").read_text())
    assert summary["iterations"] == 3
    assert summary["config"]["evolution"]["sigma"] == 0.1
    assert summary["config"]["constraint"]["aggregation"] == "max"
    pops = summary["pop_size_trajectory"]
    assert pops[0] == 34 and pops == sorted(pops)
    assert len((run / "convergence.jsonl").read_text().splitlines()) == 3

    ev = tmp_path / "eval"
    assert main(["eval", "--params", str(run / "params.json"), "--out", str(ev)]) == 0
    assert (ev / "trajectory.csv").exists() and (ev / "scenario.toml").exists()
    assert "mean_tail_error" in json.loads((ev / "summary.json").read_text())
    assert main(["plot", str(ev)]) == 0
    assert (ev / "error.svg").exists()


def test_cli_errors_are_json(tmp_path, capsys):
    assert main(["eval", "--params", str(tmp_path / "missing.json")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"
    assert main(["train", "--scenario", "no-such-scenario", "--iters", "1"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ScenarioError"
    assert main(["plot", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "TraceFormatError"


def test_cli_eval_rejects_wrong_scenario(tmp_path, capsys):
    from nces_formation.policy import Layout, save_params

    p = tmp_path / "p.json"
    save_params(p, [np.zeros(112)] * 5, Layout(), "basic-linear", 0)
    assert main(["eval", "--params", str(p), "--scenario", "node-failure", "--out", str(tmp_path / "e")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "LayoutMismatch"
