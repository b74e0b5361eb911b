import json
import shutil
import subprocess

import pytest

from mapdfs.cli import main


def test_validate_ok(capsys):
    assert main(["validate", "env1", "-n", "22"]) == 0
    assert "SC1" in capsys.readouterr().out


def test_validate_ac1_fails(capsys):
    assert main(["validate", "env4", "-n", "9", "--json"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["ac1"]["passed"] is False


def test_validate_structure_fails(tmp_path, capsys):
    from mapdfs.layouts import build_figure3

    f = tmp_path / "f3.json"
    f.write_text(json.dumps(build_figure3().to_dict()))
    assert main(["validate", str(f)]) == 1


def test_bad_json_is_validation_failure(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{oops")
    assert main(["validate", str(f)]) == 1


def test_missing_file_is_io_error(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 3


def test_orient_then_plan(tmp_path, capsys):
    out = tmp_path / "o.json"
    assert main(["orient", "env4", "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert {e["direction"] for e in data["edges"]} == {"a_to_b"}
    capsys.readouterr()
    assert main(["plan", str(out), "0", "9"]) == 0
    path = capsys.readouterr().out.splitlines()[0].split()
    assert path[0] == "0" and path[-1] == "9"


def test_plan_unknown_node(capsys):
    assert main(["plan", "env4", "0", "77"]) == 1


def test_run_check_export(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "exp4", "--trials", "2", "--out", str(out), "--traces"]) == 0
    assert (out / "metrics.csv").read_text().startswith("n_agents,")
    traces = sorted((out / "traces").iterdir())
    assert len(traces) == 2
    assert main(["check-trace", str(traces[0]), str(out / "oriented_env.json")]) == 0
    capsys.readouterr()
    assert main(["export", str(out / "results.json"), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["completion_rate"] == 1.0


def test_check_trace_reports_collision(tmp_path, capsys):
    from mapdfs.engine import TraceEvent, trace_to_jsonl
    from mapdfs.layouts import load_bundled
    from mapdfs.orientation import orient_main_area

    env = orient_main_area(load_bundled("env4"))
    u = 0
    v = env.main_successors[u][0]
    trace = [TraceEvent(0, 0, "arrive", u), TraceEvent(0, 1, "arrive", v),
             TraceEvent(1, 0, "depart", src=u, dst=v), TraceEvent(4, 0, "arrive", src=u, dst=v)]
    f = tmp_path / "t.jsonl"
    f.write_text(trace_to_jsonl(trace))
    assert main(["check-trace", str(f), "env4"]) == 2
    assert "node_collision" in capsys.readouterr().out


def test_run_skipped_cell(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"name": "s", "environment": "env4", "agents": [9], "n_tasks": 2}))
    assert main(["run", str(f), "--trials", "1"]) == 1


@pytest.mark.skipif(shutil.which("mapdfs") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["mapdfs", "validate", "env2", "-n", "40"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
