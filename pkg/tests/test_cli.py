from __future__ import annotations

import json
import subprocess
import sys

import pytest

from hypercl.cli import run
from hypercl.report import Report, emit


def _summary(capsys):
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("{")]
    return json.loads(lines[-1])


def _config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def test_systems_list(capsys):
    assert run(["systems", "list"]) == 0
    names = capsys.readouterr().out.split()
    assert len(names) == 6
    assert {"euler", "swmhd", "elastic1d"} <= set(names)


def test_audit_euler_with_extra_param(capsys):
    assert run(["audit", "--system", "euler", "--gamma", "2", "--n-samples", "500"]) == 0
    assert _summary(capsys)["passed"]


def test_malformed_json_is_usage_error(tmp_path, capsys):
    assert run(["osc", "--config", _config(tmp_path, "{not json")]) == 2
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["osc", "--bogus", "1"],
    ["audit", "--system", "euler", "stray"],
    ["besov", "--tol-scale", "0"],
    ["osc", "--config", "/nonexistent/config.json"],
])
def test_usage_errors(argv):
    assert run(argv) == 2


def test_bad_config_values(tmp_path):
    assert run(["besov", "--config", _config(tmp_path, {"function": "cosine"})]) == 2
    assert run(["osc", "--config",
                _config(tmp_path, {"scenario": {"kind": "euler-simple-wave"}, "T": 10.0})]) == 2
    assert run(["monitor"]) == 2


def test_failed_property_exits_one(tmp_path, capsys):
    cfg = {"scenario": {"kind": "burgers-shock"}, "ladder": [64, 128], "n_pairs": 100,
           "n_snapshots": 5}
    assert run(["monitor", "--config", _config(tmp_path, cfg)]) == 1
    out = _summary(capsys)
    assert not out["passed"] and out["failures"]


def test_osc_and_exact_commands(tmp_path):
    osc = {"scenario": {"kind": "triangular-rarefaction"}, "N": 128, "n_snapshots": 4,
           "n_pairs": 200}
    assert run(["osc", "--config", _config(tmp_path, osc)]) == 0
    for kind in ("periodic-profile", "backward", "elastic-fan", "planar"):
        assert run(["exact", "--config", _config(tmp_path, {"kind": kind})]) == 0, kind


def test_besov_and_commutator(tmp_path):
    assert run(["besov"]) == 0
    cfg = {"N": 4096, "bmap": "identity", "eps_ladder": [2.0**-k for k in range(4, 8)]}
    assert run(["commutator", "--config", _config(tmp_path, cfg)]) == 0


def test_solve_writes_snapshots(tmp_path):
    cfg = {"initial": {"kind": "constant", "state": [1.0, 0.2]}, "system": "euler",
           "N": 32, "T": 0.1, "n_snapshots": 3}
    out = tmp_path / "out"
    assert run(["solve", "--config", _config(tmp_path, cfg), "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert "solve_euler.json" in files
    assert sum(name.startswith("solve_euler_rung") for name in files) == 3


def test_monitor_is_byte_deterministic(tmp_path):
    cfg = _config(tmp_path, {"scenario": {"kind": "euler-simple-wave"}, "ladder": [128, 256],
                             "n_pairs": 100, "n_snapshots": 5,
                             "ladder_ratio": 0.5})
    outs = []
    for i, workers in enumerate(("1", "2")):
        out = tmp_path / f"run{i}"
        assert run(["monitor", "--config", cfg, "--out", str(out), "--seed", "3",
                    "--workers", workers]) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]
    rungs = [n for n in outs[0] if "_rung" in n]
    assert len(rungs) == 2


def test_emit_empty_report_is_header_only(tmp_path):
    paths = emit(Report(name="empty", passed=True), tmp_path, columns=["t", "value"])
    csv = (tmp_path / "empty.csv").read_text()
    assert csv.strip() == "t,value"
    assert {p.name for p in paths} == {"empty.json", "empty.csv"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hypercl", "systems", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert len(proc.stdout.split()) == 6
