"""CLI subcommands, exit codes, and output determinism."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from idepcag.cli import main

SINE_CONFIG = {
    "system": {
        "n": 1,
        "A": [["0"]],
        "B": [["sin(2*pi*t)"]],
        "F": ["1"],
        "impulses": {"C": [["-3/2"]], "D": ["1/2"], "k_min": 1},
    },
    "grid": {"kind": "uniform", "h": 0.2, "beta": 0.2, "window": [0.0, 2.0]},
    "ivp": {"tau": 0.0, "y0": [1.0]},
    "output": {"samples": 41, "format": "csv"},
}


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def sine_config(tmp_path, **overrides):
    doc = json.loads(json.dumps(SINE_CONFIG))
    for key, val in overrides.items():
        doc[key].update(val)
    return write_config(tmp_path, doc)


def test_solve_writes_csv(runner, tmp_path):
    cfg = sine_config(tmp_path)
    out = tmp_path / "traj.csv"
    result = runner.invoke(main, ["solve", "--config", cfg, "--output", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,y_1,k,is_node,is_left_limit"
    # node rows are duplicated: 41 samples hit 10 interior nodes + endpoint
    assert len(lines) > 42


def test_solve_deterministic_bytes(runner, tmp_path):
    cfg = sine_config(tmp_path)
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        result = runner.invoke(main, ["solve", "--config", cfg, "--output", str(out)])
        assert result.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_solve_threaded_matches_serial(runner, tmp_path, monkeypatch):
    cfg = sine_config(tmp_path)
    out1 = tmp_path / "serial.csv"
    assert runner.invoke(main, ["solve", "--config", cfg, "--output", str(out1)]).exit_code == 0
    monkeypatch.setenv("IDEPCAG_NUM_THREADS", "3")
    out2 = tmp_path / "threaded.csv"
    assert runner.invoke(main, ["solve", "--config", cfg, "--output", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_solve_json_format(runner, tmp_path):
    cfg = sine_config(tmp_path, output={"samples": 5, "format": "json"})
    out = tmp_path / "traj.json"
    result = runner.invoke(main, ["solve", "--config", cfg, "--output", str(out)])
    assert result.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc["columns"][0] == "t"
    assert doc["rows"][0][1] == 1.0


def test_malformed_expression_exits_3(runner, tmp_path):
    doc = json.loads(json.dumps(SINE_CONFIG))
    doc["system"]["B"] = [["sin(2*pi*t"]]
    cfg = write_config(tmp_path, doc)
    result = runner.invoke(main, ["solve", "--config", cfg])
    assert result.exit_code == 3
    assert "offset" in result.output


def test_schema_violation_exits_3(runner, tmp_path):
    doc = {"system": {"n": 1, "A": [["0"]]}}  # missing B, grid, ivp
    cfg = write_config(tmp_path, doc)
    result = runner.invoke(main, ["check", "--config", cfg])
    assert result.exit_code == 3


def test_hypothesis_failure_exits_2_and_force_overrides(runner, tmp_path):
    cfg = sine_config(
        tmp_path,
        grid={"kind": "uniform", "h": 5.0, "beta": 0.2, "window": [0.0, 10.0]},
        output={"samples": 5},
    )
    result = runner.invoke(main, ["solve", "--config", cfg])
    assert result.exit_code == 2
    forced = runner.invoke(main, ["solve", "--config", cfg, "--force"])
    assert forced.exit_code == 0


def test_check_pass_and_fail(runner, tmp_path):
    ok = runner.invoke(main, ["check", "--config", sine_config(tmp_path)])
    assert ok.exit_code == 0
    assert "pass" in ok.output
    bad_cfg = sine_config(
        tmp_path, grid={"kind": "uniform", "h": 5.0, "beta": 0.2, "window": [0.0, 10.0]}
    )
    bad = runner.invoke(main, ["check", "--config", bad_cfg])
    assert bad.exit_code == 2
    assert "FAIL" in bad.output


def test_check_json_report(runner, tmp_path):
    result = runner.invoke(
        main, ["check", "--config", sine_config(tmp_path), "--format", "json"]
    )
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["h2"]["passed"] is True
    assert doc["h3"]["passed"] is True
    assert len(doc["h3"]["intervals"]) == 10


def test_scenario_compare_reports_error(runner, tmp_path):
    out = tmp_path / "s1.csv"
    result = runner.invoke(
        main,
        [
            "scenario",
            "s1-geometric",
            "--params",
            "alpha=0.9",
            "--params",
            "beta_imp=1.2",
            "--params",
            "x0=1.8",
            "--compare",
            "--output",
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    marker = "max |solve - closed_form| = "
    line = next(l for l in result.output.splitlines() if marker in l)
    assert float(line.split("= ")[1]) <= 1e-7


def test_scenario_unknown_id(runner):
    result = runner.invoke(main, ["scenario", "nope"])
    assert result.exit_code == 3


def test_scenario_constant_when_c_is_one(runner, tmp_path):
    out = tmp_path / "s2.csv"
    result = runner.invoke(
        main,
        ["scenario", "s2-impulse-product", "--params", "c=1", "--samples", "20", "--output", str(out)],
    )
    assert result.exit_code == 0
    rows = out.read_text().strip().split("\n")[1:]
    vals = {float(r.split(",")[1]) for r in rows}
    assert max(vals) - min(vals) <= 1e-9


def test_fundamental_constant_exponential(runner, tmp_path):
    doc = {
        "system": {"n": 1, "A": [["0.5"]], "B": [["0"]]},
        "grid": {"kind": "uniform", "h": 1.0, "window": [0.0, 4.0]},
        "ivp": {"tau": 0.0, "y0": [1.0]},
        "output": {"samples": 9},
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "w.csv"
    result = runner.invoke(main, ["fundamental", "--config", cfg, "--output", str(out)])
    assert result.exit_code == 0
    rows = out.read_text().strip().split("\n")
    assert rows[0] == "t,W_11"
    for row in rows[1:]:
        t, w = (float(v) for v in row.split(","))
        assert w == pytest.approx(np.exp(0.5 * t), rel=1e-9)


def test_fundamental_steps_through_jump_powers(runner, tmp_path):
    doc = {
        "system": {
            "n": 1,
            "A": [["0.3*cos(t)"]],
            "B": [["-(0.3*cos(t))"]],
            "impulses": {"C": [["-2.1"]]},
        },
        "grid": {"kind": "uniform", "h": 1.0, "window": [0.0, 4.0]},
        "ivp": {"tau": 0.0, "y0": [1.0]},
    }
    cfg = write_config(tmp_path, doc)
    result = runner.invoke(
        main, ["fundamental", "--config", cfg, "--times", "0.5,1.5,2.5,3.5"]
    )
    assert result.exit_code == 0
    rows = result.output.strip().split("\n")[1:]
    for i, row in enumerate(rows):
        w = float(row.split(",")[1])
        assert w == pytest.approx((-1.1) ** i, rel=1e-8)


def test_bounds_table_dominates(runner, tmp_path):
    doc = {
        "system": {
            "n": 1,
            "A": [["0.2*sin(t)"]],
            "B": [["0.15"]],
            "impulses": {"C": [["0.1"]]},
        },
        "grid": {"kind": "uniform", "h": 1.0, "beta": 0.4, "window": [0.0, 4.0]},
        "ivp": {"tau": 0.0, "y0": [1.0]},
        "output": {"samples": 15},
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "bounds.csv"
    result = runner.invoke(main, ["bounds", "--config", cfg, "--output", str(out)])
    assert result.exit_code == 0, result.output
    rows = out.read_text().strip().split("\n")
    assert rows[0].startswith("t,y_norm,gronwall1,dominated1")
    for row in rows[1:]:
        cells = row.split(",")
        assert cells[3] == "1"
        assert cells[5] == "1"
