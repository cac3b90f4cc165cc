import json
import subprocess
import sys

import pytest

from zoomsk.cli import EXIT_CONFIG, EXIT_INFEASIBLE, main, parse_snr_grid
from zoomsk.channel import ChannelConfig, db_to_linear
from zoomsk.planner import validate_plan
from zoomsk.sk import SkConfig
from zoomsk.zsk import ZoomPlan


def test_snr_grid_parsing():
    assert parse_snr_grid(["1", "2.5"]) == [1.0, 2.5]
    assert parse_snr_grid(["0,1,2"]) == [0.0, 1.0, 2.0]
    assert parse_snr_grid(["0:1:0.25"]) == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ValueError):
        parse_snr_grid(["3:1:1"])


def test_plan_then_simulate_round_trip(tmp_path, capsys):
    plan_file = tmp_path / "plan.json"
    assert main(["plan", "--n", "10", "--bits", "7", "--pe-target", "1e-6", "--epsilon", "1e-3",
                 "--out", str(plan_file)]) == 0
    assert "M=[" in capsys.readouterr().out
    data = json.loads(plan_file.read_text())
    plan = ZoomPlan.from_dict(data)
    cfg = SkConfig(10, 7, ChannelConfig(db_to_linear(data["snr_target_db"])))
    assert validate_plan(plan, cfg, 1e-3).ok

    out = tmp_path / "ser.csv"
    assert main(["simulate", "--plan-file", str(plan_file), "--precision", "half",
                 "--snr-db", "3,4", "--trials", "500", "--seed", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    meta = json.loads(lines[0][2:])
    assert ZoomPlan.from_dict(meta["plan"]) == plan and meta["seed"] == 2
    assert lines[1].startswith("snr_db,trials,errors") and len(lines) == 4


def test_simulate_sk_stdout(capsys):
    assert main(["simulate", "--n", "10", "--bits", "7", "--snr-db", "2", "--trials", "200"]) == 0
    assert ",sk,double,10,7" in capsys.readouterr().out


def test_bound_table(capsys):
    assert main(["bound", "--n", "10", "--bits", "7", "--snr-db", "1:3:1"]) == 0
    rows = capsys.readouterr().out.splitlines()[2:]
    assert len(rows) == 3
    # plain plan: ZSK bound equals the tight SK bound
    for r in rows:
        f = r.split(",")
        assert f[2] == f[4]


def test_couple(tmp_path, capsys):
    plan_file = tmp_path / "p.json"
    plan_file.write_text(ZoomPlan.from_lists([4, 8, 4], [4, 6, 8]).to_json(n=10))
    assert main(["couple", "--plan-file", str(plan_file), "--snr-db", "5", "--trials", "10"]) == 0
    cap = capsys.readouterr()
    assert "coupling" in cap.err and cap.out.splitlines()[1].startswith("snr_db")


@pytest.mark.parametrize("argv,code", [
    (["plan", "--n", "10", "--bits", "7", "--pe-target", "1.5"], EXIT_CONFIG),
    (["plan", "--n", "3", "--bits", "40", "--pe-target", "1e-9"], EXIT_INFEASIBLE),
    (["simulate", "--snr-db", "1"], EXIT_CONFIG),
    (["simulate", "--n", "10", "--bits", "7", "--snr-db", "1", "--trials", "0"], EXIT_CONFIG),
    (["simulate", "--n", "10", "--bits", "7", "--snr-db", "1", "--scheme", "zsk"], EXIT_CONFIG),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1


def test_plan_file_mismatch(tmp_path):
    plan_file = tmp_path / "p.json"
    plan_file.write_text(ZoomPlan.from_sizes([4, 8], [3]).to_json())
    assert main(["simulate", "--plan-file", str(plan_file), "--n", "10", "--bits", "7",
                 "--snr-db", "1"]) == EXIT_CONFIG


def test_usage_error_and_module_entry():
    r = subprocess.run([sys.executable, "-m", "zoomsk", "simulate", "--precision", "quad",
                        "--snr-db", "1"], capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run([sys.executable, "-m", "zoomsk", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
