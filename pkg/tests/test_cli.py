import json
import math

import numpy as np

from volterrabound.cli import main

from conftest import ATAN_PROBLEM, QUADRATIC_PROBLEM, write_problem


def run(args):
    return main(args)


def test_solve_completed(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", ATAN_PROBLEM)
    out = tmp_path / "out"
    code = run(["solve", "--problem", problem, "--t-end", "2", "--step", "0.01", "--out", str(out)])
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,u"
    assert lines[-1] == "# status=completed"
    assert len(lines) == 2 + 201


def test_solve_zero_kernel_matches_forcing(tmp_path):
    problem = write_problem(
        tmp_path / "p.json",
        {"f": "cos(t)", "a": "0", "c0": 2, "b0": 0, "c1": 0, "b1": 0, "c2": 0, "b": 0, "p": 1},
    )
    out = tmp_path / "out"
    code = run(["solve", "--problem", problem, "--t-end", "1", "--step", "0.1", "--out", str(out)])
    assert code == 0
    rows = (out / "trajectory.csv").read_text().splitlines()[1:-1]
    for row in rows:
        t, u = (float(x) for x in row.split(","))
        assert abs(u - math.cos(t)) <= np.spacing(abs(math.cos(t)))


def test_solve_blowup_exit_code_and_message(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", QUADRATIC_PROBLEM)
    out = tmp_path / "out"
    code = run(["solve", "--problem", problem, "--t-end", "2", "--step", "0.001", "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 3
    assert "blow-up detected near t=1.00" in captured.out
    assert "# status=blowup" in (out / "trajectory.csv").read_text()


def test_solve_missing_file(tmp_path, capsys):
    code = run(["solve", "--problem", str(tmp_path / "missing.json")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_solve_invalid_flag_values(tmp_path):
    problem = write_problem(tmp_path / "p.json", ATAN_PROBLEM)
    assert run(["solve", "--problem", problem, "--step", "-0.1"]) == 1


def test_certify_atan(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", ATAN_PROBLEM)
    out = tmp_path / "out"
    code = run(["certify", "--problem", problem, "--out", str(out)])
    assert code == 0
    assert "certified" in capsys.readouterr().out
    payload = json.loads((out / "certificate.json").read_text())
    assert payload["validation"]["passed"] is True
    cert = payload["certificate"]
    assert cert["verdict"] == "certified"
    assert cert["family"] == "exponential"
    assert cert["rate"] > 0 and cert["coefficient"] > 0
    assert cert["tail_check"]["passed"] is True


def test_certify_quadratic_refused(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", QUADRATIC_PROBLEM)
    out = tmp_path / "out"
    code = run(["certify", "--problem", problem, "--out", str(out)])
    assert code == 2
    captured = capsys.readouterr().out
    assert "no certificate" in captured
    payload = json.loads((out / "certificate.json").read_text())
    assert payload["certificate"]["verdict"] == "refused"


def test_certify_malformed_envelope(tmp_path, capsys):
    bad = dict(ATAN_PROBLEM, p=-0.5)
    problem = write_problem(tmp_path / "p.json", bad)
    code = run(["certify", "--problem", problem, "--out", str(tmp_path)])
    assert code == 1


def test_verify_atan_end_to_end(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", ATAN_PROBLEM)
    out = tmp_path / "out"
    code = run(
        ["verify", "--problem", problem, "--t-end", "3", "--step", "0.01", "--out", str(out)]
    )
    assert code == 0
    assert "bound holds" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["bound_check"]["holds"] is True
    assert report["bound_check"]["min_slack"] > 0.0
    # bound.csv is machine-checkable on its own: u <= g and u < mu_inv
    rows = (out / "bound.csv").read_text().splitlines()
    assert rows[0] == "t,u,g,mu_inv"
    for row in rows[1:]:
        _, u, g, mu_inv = (float(x) for x in row.split(","))
        assert u <= g + 1e-9
        assert u < mu_inv


def test_verify_quadratic_refused_with_blowup_note(tmp_path, capsys):
    problem = write_problem(tmp_path / "p.json", QUADRATIC_PROBLEM)
    out = tmp_path / "out"
    code = run(
        ["verify", "--problem", problem, "--t-end", "2", "--step", "0.001", "--out", str(out)]
    )
    assert code == 2
    captured = capsys.readouterr().out
    assert "no certificate" in captured
    assert "blows up near t=1.00" in captured


def test_demo_blowup(tmp_path, capsys):
    out = tmp_path / "demo"
    code = run(["demo-blowup", "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "blow-up detected near t=1.00" in captured
    assert "refused" in captured
    assert (out / "trajectory.csv").exists()
    assert (out / "certificate.json").exists()


def test_outputs_byte_identical_between_runs(tmp_path):
    problem = write_problem(tmp_path / "p.json", ATAN_PROBLEM)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["verify", "--problem", problem, "--t-end", "2", "--step", "0.01"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    for name in ("trajectory.csv", "bound.csv", "report.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
