import json
import subprocess
import sys

import numpy as np
import pytest

from thermo_reach.cli import parse_series, run, worker_count, build_parser
from thermo_reach.channels import SwapStep
from thermo_reach.reach import ReachableSet


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_curve_csv(capsys):
    code, out, _ = call(capsys, "curve", "--fixture", "qutrit_213")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,y" and len(lines) == 5


def test_order(capsys):
    code, out, _ = call(capsys, "order", "--energies", "0,0.2,0.5", "--state", "0.35,0.55,0.1")
    assert code == 0 and json.loads(out)["order"] == [2, 1, 3]


def test_bounds_theory_column(capsys):
    code, out, _ = call(capsys, "bounds", "--d", "4", "5", "6", "7")
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert code == 0
    assert [int(r[2]) for r in rows] == [20, 58, 238, 1259]
    assert [int(r[1]) for r in rows] == [24, 120, 720, 5040]


def test_bounds_sampled(capsys):
    code, out, _ = call(capsys, "bounds", "--d", "4", "--samples", "5", "--threads", "1")
    row = out.strip().splitlines()[1].split(",")
    assert code == 0 and int(row[3]) <= 8 and row[5] == "0"


def test_reach_qutrit_vertex_count(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = call(capsys, "reach", "--fixture", "qutrit_213", "--method", "eto-qutrit", "--json-out", str(path))
    assert code == 0
    rs = ReachableSet.from_json(json.loads(path.read_text())["reachable"])
    assert 1 <= len(rs) <= 8


def test_reach_output_is_byte_identical(capsys):
    a = call(capsys, "reach", "--fixture", "qutrit_123", "--method", "eto-hull")[1]
    b = call(capsys, "reach", "--fixture", "qutrit_123", "--method", "eto-hull")[1]
    assert a == b and a.endswith("\n")


def test_reach_barycentric_csv(capsys):
    code, out, _ = call(capsys, "reach", "--fixture", "qutrit_213", "--method", "to", "--csv")
    assert code == 0 and out.startswith("set,p_1,p_2,p_3,x,y") and len(out.splitlines()) == 7


def test_optimal_catalyst(capsys):
    code, out, _ = call(capsys, "catalysis", "optimal-c1", "--fixture", "qutrit_213")
    assert code == 0 and abs(json.loads(out)["c1"] - 0.3816) <= 1e-4


def test_trajectory_series(capsys):
    code, out, _ = call(capsys, "trajectory", "--fixture", "qutrit_swap_demo")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "t,p_1,p_2,p_3,F" and len(lines) == 3
    f = [float(l.split(",")[-1]) for l in lines[1:]]
    assert f[1] <= f[0]


def test_trajectory_jc(capsys):
    code, out, _ = call(capsys, "trajectory", "--fixture", "qutrit_213", "--jc", "1-2", "--samples", "7")
    assert code == 0 and len(out.strip().splitlines()) == 8


def test_verify_reports_counts(capsys):
    code, out, _ = call(capsys, "verify", "--samples", "10")
    assert code == 0
    assert all(line.endswith("0 failed") for line in out.strip().splitlines())


def test_sample_is_seeded(capsys):
    a = call(capsys, "sample", "--d", "4", "--seed", "3")[1]
    b = call(capsys, "sample", "--d", "4", "--seed", "3")[1]
    assert a == b and len(json.loads(a)["probs"]) == 4


def test_config_file_matches_flags(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"beta_energies": [0, 0.2, 0.5], "probs": [0.35, 0.55, 0.1]}))
    a = call(capsys, "curve", "--config", str(cfg))[1]
    b = call(capsys, "curve", "--energies", "0,0.2,0.5", "--state", "0.35,0.55,0.1")[1]
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["reach", "--method", "bogus", "--fixture", "qutrit_213"],
        ["reach"],
        ["reach", "--fixture", "missing"],
        ["curve", "--energies", "0,1", "--state", "0.5,0.6"],
        ["curve", "--energies", "0,1,2", "--state", "0.5,0.5"],
        ["trajectory", "--fixture", "qutrit_213", "--series", "1-9"],
        ["catalysis", "slice", "--fixture", "qutrit_213"],
        ["bounds", "--d", "2"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_numerical_failure_names_operation(capsys):
    code, _, err = call(
        capsys, "catalysis", "transition", "--fixture", "qutrit_213", "--c1", "0.5",
        "--target", "0.05,0.9,0.05", "--all-vertices",
    )
    assert code == 1
    assert "catalysis.decompose_transition" in err


def test_precondition_failure_exits_one(capsys):
    code, _, err = call(capsys, "reach", "--fixture", "qutrit_213", "--method", "eto-mono")
    assert code == 1 and "reach.eto_monotonic" in err


def test_thread_count_sources(monkeypatch):
    args = build_parser().parse_args(["verify"])
    monkeypatch.setenv("THERMO_REACH_THREADS", "3")
    assert worker_count(args) == 3
    args = build_parser().parse_args(["verify", "--threads", "2"])
    assert worker_count(args) == 2


def test_parse_series():
    assert parse_series("1-2, 2-3:0.5") == (SwapStep(1, 2), SwapStep(2, 3, 0.5))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "thermo_reach", "bounds", "--d", "5"], capture_output=True, text=True)
    assert res.returncode == 0 and ",58," in res.stdout
