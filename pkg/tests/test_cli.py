import json

import pytest

from graphlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_experiment_ok_and_assert(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: E1\nsequence: {generator: mix13, n: 5000}\ntrials: 10\n")
    code, out, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(tmp_path / "r.csv"), "--assert")
    assert code == 0 and json.loads(out)["experiment"] == "E1"
    strict = tmp_path / "s.yaml"
    strict.write_text("experiment: E1\nsequence: {generator: mix13, n: 5000}\ntrials: 10\nepsilon: 0.0001\nrequired_fraction: 1.0\n")
    code, _, err = run(capsys, "experiment", "--config", str(strict), "--assert", "--seed", "1")
    assert code in (0, 4)
    impossible = tmp_path / "i.yaml"
    impossible.write_text("experiment: E4\nsequence: {generator: lower_bound, n: 20000, delta: 10, eps: 0.5}\ntrials: 3\nfactor: 1000\n")
    code, _, err = run(capsys, "experiment", "--config", str(impossible), "--assert")
    assert code == 4 and "acceptance" in err


def test_config_error_exit(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: E1\nsequence: {generator: mix13, n: 5000}\nwhatever: 3\n")
    code, _, err = run(capsys, "experiment", "--config", str(cfg))
    assert code == 2 and "whatever" in err
    code, _, _ = run(capsys, "experiment", "--config", str(tmp_path / "missing.yaml"))
    assert code == 2


def test_precondition_exit(capsys):
    code, _, err = run(capsys, "llt", "--dist=-1:0.7,1:0.3", "--n", "10")
    assert code == 3
    code, _, _ = run(capsys, "um", "sample", "--sequence", "3,3,1,1")
    assert code == 3


def test_walk_csv(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, _, _ = run(capsys, "walk", "--step=-1:0.7,1:0.3", "--start", "1", "--tmax", "5", "--trials", "1000", "--out", str(out), "--assert")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,exact,bound,empirical"
    assert float(lines[2].split(",")[1]) == pytest.approx(0.7)
    assert float(lines[4].split(",")[1]) == pytest.approx(0.147)


def test_cm_and_um_subcommands(tmp_path, capsys):
    code, out, _ = run(capsys, "cm", "explore", "--sequence", "1,1")
    assert code == 0 and out.splitlines()[0] == "t,X_t,M_t,Q_t,R_t,event"
    code, out, _ = run(capsys, "cm", "l1", "--sequence", "1,1,1,1", "--trials", "3")
    assert code == 0 and len(out.splitlines()) == 4
    code, _, _ = run(capsys, "um", "sample", "--sequence", "2,2,2", "--method", "switching", "--out", str(tmp_path / "g.txt"))
    assert code == 0 and (tmp_path / "g.txt").read_text().startswith("# vertices 3")
    code, out, err = run(capsys, "um", "explore", "--sequence", ",".join(["1"] * 300 + ["3"] * 60), "--Q0", "-0.3")
    assert code == 0 and "tau_x" in err


def test_theory_json(capsys):
    code, out, _ = run(capsys, "theory", "--sequence", "1,1,1,1,1,1,1,3")
    data = json.loads(out)
    assert code == 0 and data["Q"] == pytest.approx(-0.4) and data["R"] == pytest.approx(1.0)
    assert data["theta0"] == pytest.approx(0.42365, abs=1e-5)


def test_llt_json(capsys):
    code, out, _ = run(capsys, "llt", "--dist=-1:0.5,1:0.5", "--n", "50", "100", "--assert")
    rows = json.loads(out)
    assert code == 0 and [r["n"] for r in rows] == [50, 100] and all(r["holds"] for r in rows)
