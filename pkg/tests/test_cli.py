import json
import subprocess
import sys

import pytest

from auxmean.cli import run_cli
from auxmean.estimator import ProblemSpec, ScalarEstimator, minmax_risk, risk_from_moments
from auxmean.experiments import CSV_HEADER, results_from_csv
from auxmean.gaussian import GaussianMoments

SMALL_FLAGS = ["--n", "5", "--N", "60", "--d", "8", "--eps", "0.5", "--delta-sq", "1"]


def run(capsys, *argv):
    code = run_cli(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_weight_matches_library(capsys):
    code, out, _ = run(capsys, "weight", "--n", "20", "--N", "1000", "--d", "200", "--eps", "1",
                       "--delta-sq", "1", "--mode", "frobenius")
    assert code == 0
    report = minmax_risk(ProblemSpec(20, 1000, 200, 1.0, 1.0, "frobenius"))
    assert json.loads(out) == {"s": report.s_star, "risk": report.risk_star}


def test_risk_without_moments(capsys):
    code, out, _ = run(capsys, "risk", *SMALL_FLAGS, "--mode", "trace")
    assert code == 0
    data = json.loads(out)
    spec = ProblemSpec(5, 60, 8, 0.5, 1.0, "trace")
    assert data == minmax_risk(spec).to_dict()


def test_w2_identical_files(capsys, tmp_path):
    m = {"mean": [1.0, 2.0], "cov": [[2.0, 0.3], [0.3, 1.0]]}
    p = write_json(tmp_path / "p.json", m)
    q = write_json(tmp_path / "q.json", m)
    code, out, _ = run(capsys, "w2", "--p", p, "--q", q)
    assert code == 0
    assert json.loads(out) == {"w2_squared": 0.0}


@pytest.mark.parametrize("kind", ["large-n", "kkt"])
def test_adversary_round_trip(capsys, tmp_path, kind):
    code, out, _ = run(capsys, "adversary", *SMALL_FLAGS, "--kind", kind, "--mode", "operator")
    assert code == 0
    pair_path = tmp_path / "pair.json"
    pair_path.write_text(out)

    code, out, _ = run(capsys, "w2", "--pair", str(pair_path))
    assert code == 0
    assert json.loads(out)["w2_squared"] == pytest.approx(0.25, rel=1e-8)

    code, out, _ = run(capsys, "risk", *SMALL_FLAGS, "--mode", "operator", "--pair", str(pair_path), "--s", "0.3")
    assert code == 0
    data = json.loads(out)
    pair = json.loads(pair_path.read_text())
    p, q = GaussianMoments.from_dict(pair["p"]), GaussianMoments.from_dict(pair["q"])
    assert data["mse"] == risk_from_moments(ScalarEstimator(0.3), p, q, 5, 60)


def test_adversary_direction(capsys):
    code, out, _ = run(capsys, "adversary", "--d", "2", "--direction", "0,1")
    assert code == 0
    assert json.loads(out)["q"]["mean"] == [0.0, 1.0]


def test_kkt_infeasible_exit_1(capsys):
    code, out, err = run(capsys, "adversary", "--kind", "kkt", "--d", "200", "--N", "3", "--eps", "0.1")
    assert code == 1
    assert out == ""
    assert "budget exhausted" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["weight", "--n", "0"],
    ["weight", "--mode", "nuclear"],
    ["weight", "--config", "/nonexistent/config.json"],
    ["w2"],
    ["adversary", "--direction", "1,1"],
    ["simulate", "--trials", "0"],
    ["sweep", "--trials", "2"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_conflicting_moment_flags(capsys, tmp_path):
    m = write_json(tmp_path / "m.json", {"mean": [0.0], "cov": [[1.0]]})
    code, _, err = run(capsys, "w2", "--pair", m, "--p", m, "--q", m)
    assert code == 2
    assert "conflicts" in err


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"spec": {"n": 7, "N": 70, "d": 3, "eps": 0.2, "delta_sq": 2.0, "mode": "trace"}})
    code, out, _ = run(capsys, "weight", "--config", cfg, "--N", "700")
    assert code == 0
    report = minmax_risk(ProblemSpec(7, 700, 3, 0.2, 2.0, "trace"))
    assert json.loads(out) == {"s": report.s_star, "risk": report.risk_star}


def test_simulate_csv_to_file(capsys, tmp_path):
    out_path = tmp_path / "sim.csv"
    code, out, _ = run(capsys, "simulate", *SMALL_FLAGS, "--trials", "20", "--seed", "4", "--output", str(out_path))
    assert code == 0 and out == ""
    text = out_path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    rows = results_from_csv(text)
    assert [r["estimator"] for r in rows] == ["true_mean", "pooled_mean", "optimal"]
    assert all(r["trials"] == 20 and r["seed"] == 4 and r["epsilon"] == 0.5 for r in rows)


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", *SMALL_FLAGS, "--trials", "5", "--format", "json", "--estimators", "optimal")
    assert code == 0
    data = json.loads(out)
    assert list(data["results"][0]["estimators"]) == ["optimal"]
    assert data["config"]["trials"] == 5


def test_sweep_eps_list(capsys):
    code, out, _ = run(capsys, "sweep", *SMALL_FLAGS, "--trials", "5", "--eps-list", "1,0.1")
    assert code == 0
    eps = [r["epsilon"] for r in results_from_csv(out)]
    assert eps == [0.1] * 3 + [1.0] * 3


def test_verify_json_lines(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "unbounded", "--seed", "7")
    assert code == 0
    reports = [json.loads(line) for line in out.splitlines()]
    assert reports and all(r["passed"] for r in reports)
    assert set(reports[0]) >= {"quantity", "closed_form", "oracle_value", "abs_gap", "passed", "tolerance"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "auxmean", "weight", "--d", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    data = json.loads(proc.stdout)
    assert 0 < data["s"] < 1
