import json
import math

import numpy as np
import pytest

from vnhc import (
    State,
    build_boat,
    load_model,
    model_to_dict,
    save_model,
    solve_control,
)
from vnhc.cli import main

DEGENERATE = {
    "coordinates": ["x", "y"],
    "metric": [["1", "0"], ["0", "1"]],
    "inputs": [["0", "1"]],
    "constraint": {"mu": [["1", "0"]], "Z": ["0"]},
}


@pytest.fixture
def boat_file(tmp_path):
    path = tmp_path / "boat.json"
    model, con = build_boat("0", "0", m=1.0, I=1.0)
    save_model(path, model, con)
    return str(path)


def write_json(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestCheck:
    def test_boat_ok(self, boat_file, capsys):
        code = main(["check", boat_file, "--grid", "theta=0:6.28:8"])
        out = capsys.readouterr().out
        assert code == 0
        assert "transversality=ok" in out
        assert "cond=1 " in out or "cond=1\n" in out or "cond=1" in out
        assert out.count("q=(") == 8

    def test_degenerate_violation(self, tmp_path, capsys):
        path = write_json(tmp_path, "degenerate.json", DEGENERATE)
        code = main(["check", path])
        out = capsys.readouterr().out
        assert code == 1
        assert "VIOLATION" in out

    def test_malformed_expression(self, tmp_path, capsys):
        bad = dict(DEGENERATE)
        bad["metric"] = [["1 +", "0"], ["0", "1"]]
        path = write_json(tmp_path, "bad.json", bad)
        code = main(["check", path])
        err = capsys.readouterr().err
        assert code == 2
        assert "byte offset" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        bad = dict(DEGENERATE)
        bad["extra"] = 1
        path = write_json(tmp_path, "unknown.json", bad)
        assert main(["check", path]) == 2

    def test_missing_file(self, capsys):
        assert main(["check", "/nonexistent/model.json"]) == 2

    def test_point_flag(self, boat_file, capsys):
        code = main(["check", boat_file, "--point", "theta=1.0,x=2"])
        assert code == 0
        assert "q=(2, 0, 1)" in capsys.readouterr().out


class TestSimulate:
    def test_projected_run(self, boat_file, tmp_path, capsys):
        out_csv = str(tmp_path / "traj.csv")
        code = main([
            "simulate", boat_file,
            "--q0", "0,0,0.5", "--qdot0", "0.4,0.3,0.8",
            "--t-end", "1.0", "--dt", "1e-3", "--sample-every", "100",
            "--project", "--out", out_csv,
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["drift_report"][0] <= 1e-8
        assert abs(summary["phi0"][0]) <= 1e-12
        lines = open(out_csv).read().splitlines()
        assert lines[0] == "t,x,y,theta,xd,yd,thetad,tau_1,phi_1"
        assert len(lines) == summary["samples"] + 1
        # 17 significant digits, locale-independent decimal point
        first = lines[1].split(",")
        assert all("," not in v for v in first)
        assert any(len(v.replace("-", "").replace(".", "").lstrip("0")) >= 15
                   for v in lines[2].split(","))

    def test_off_constraint_conservation(self, boat_file, tmp_path, capsys):
        out_csv = str(tmp_path / "traj.csv")
        code = main([
            "simulate", boat_file,
            "--q0", "0,0,0", "--qdot0", "0.3,-0.7,-0.2",
            "--t-end", "2.0", "--dt", "1e-3", "--sample-every", "100",
            "--out", out_csv,
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["phi0"][0] == pytest.approx(0.7, abs=1e-14)
        assert summary["drift_report"][0] <= 1e-8

    def test_dt_zero_is_usage_error(self, boat_file, tmp_path):
        with pytest.raises(SystemExit) as err:
            main([
                "simulate", boat_file,
                "--q0", "0,0,0", "--qdot0", "0,0,0",
                "--t-end", "1.0", "--dt", "0",
                "--out", str(tmp_path / "x.csv"),
            ])
        assert err.value.code == 2

    def test_wrap_option(self, boat_file, tmp_path, capsys):
        out_csv = str(tmp_path / "traj.csv")
        main([
            "simulate", boat_file,
            "--q0", "0,0,3.0", "--qdot0", "0,0,1.0",
            "--t-end", "1.0", "--dt", "1e-2",
            "--out", out_csv, "--wrap", "theta",
        ])
        capsys.readouterr()
        rows = [l.split(",") for l in open(out_csv).read().splitlines()[1:]]
        thetas = [float(r[3]) for r in rows]
        assert all(-math.pi < t <= math.pi for t in thetas)
        # wrapping is presentation-only: velocity column unaffected
        assert all(float(r[6]) == 1.0 for r in rows)


class TestControlAt:
    def test_boat_value(self, boat_file, capsys):
        code = main(["control-at", boat_file, "--q", "0,0,0", "--qdot", "1,0,1"])
        assert code == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["tau"][0] == pytest.approx(-1.0, abs=1e-12)
        assert rec["P"] == [[1.0]]
        assert rec["cond_estimate"] == 1.0

    def test_zero_spin_zero_control(self, boat_file, capsys):
        main(["control-at", boat_file, "--q", "1,2,0.7", "--qdot", "0.5,-0.3,0"])
        rec = json.loads(capsys.readouterr().out)
        assert rec["tau"][0] == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_exit_1(self, tmp_path, capsys):
        path = write_json(tmp_path, "degenerate.json", DEGENERATE)
        code = main(["control-at", path, "--q", "0,0", "--qdot", "1,1"])
        assert code == 1
        assert "singular" in capsys.readouterr().err


class TestFixtureRoundTrip:
    def test_fixture_command(self, tmp_path, capsys):
        out = str(tmp_path / "boat.json")
        code = main(["fixture", "boat", "--current", "vortex", "--out", out])
        assert code == 0
        model, con = load_model(out)
        assert model.coordinates == ("x", "y", "theta")

    def test_round_trip_identical_solves(self, tmp_path, rng):
        model, con = build_boat("sin(y)", "cos(x)", m=1.7, I=0.4)
        path = tmp_path / "boat.json"
        save_model(path, model, con)
        model2, con2 = load_model(path)
        for _ in range(100):
            s = State(q=tuple(rng.uniform(-2, 2, 3)), qdot=tuple(rng.uniform(-2, 2, 3)))
            a = solve_control(model, con, s)
            b = solve_control(model2, con2, s)
            assert np.max(np.abs(np.array(a.P) - np.array(b.P))) <= 1e-12
            assert np.max(np.abs(np.array(a.b) - np.array(b.b))) <= 1e-12
            assert np.max(np.abs(np.array(a.tau) - np.array(b.tau))) <= 1e-12

    def test_dict_round_trip_stable(self):
        model, con = build_boat("0.3", "0.1*x")
        d1 = model_to_dict(model, con)
        path_free = json.loads(json.dumps(d1))
        assert path_free == d1

    def test_constraint_from_vector_field(self, tmp_path):
        # giving X instead of Z must produce Z = -S X
        data = {
            "coordinates": ["x", "y", "theta"],
            "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
            "inputs": [["sin(theta)", "-cos(theta)", "1"]],
            "constraint": {
                "mu": [["sin(theta)", "-cos(theta)", "0"]],
                "X": ["0.5", "0.25", "0"],
            },
        }
        path = write_json(tmp_path, "xform.json", data)
        _, con = load_model(path)
        th = 0.9
        z = con.z_at((0.0, 0.0, th))[0]
        assert z == pytest.approx(-(math.sin(th) * 0.5 - math.cos(th) * 0.25))

    def test_z_and_x_together_rejected(self, tmp_path):
        data = {
            "coordinates": ["x"],
            "metric": [["1"]],
            "inputs": [],
            "constraint": {"mu": [["1"]], "Z": ["0"], "X": ["0"]},
        }
        path = write_json(tmp_path, "both.json", data)
        assert main(["check", path]) == 2
