import json
import subprocess
import sys

import numpy as np
import pytest

from swarm_escape import Predator1D, Sim1DParams, sample_initial_1d, simulate_1d
from swarm_escape.cli import run_command
from swarm_escape.config import OUTPUT_DIR_ENV, ConfigError, RunConfig
from swarm_escape.output import cell, read_csv


def run(capsys, *argv):
    code = run_command([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def numbers(rows, col):
    return [cell(r[col]) for r in rows]


class TestSimulate1D:
    def test_happy_path(self, tmp_path, capsys):
        code, out, _ = run(capsys, "simulate-1d", "--n", 3, "--rho", 0.1, "--seed", 7, "--out", tmp_path)
        assert code == 0
        prov, header, rows = read_csv(tmp_path / "trajectory_1d.csv")
        assert header == ["t", "m", "d_rho", "x_0", "x_1", "x_2"]
        assert prov["seed"] == 7 and prov["n"] == 3 and prov["rho"] == 0.1
        assert all(r[2] == "" for r in rows)
        summary = json.loads((tmp_path / "summary_1d.json").read_text())
        assert summary["config"] == prov
        assert summary["report"]["d_ss"] is None

    def test_round_trip_is_exact(self, tmp_path, capsys):
        run(capsys, "simulate-1d", "--n", 25, "--rho", 0.07, "--seed", 3, "--xp", 0.4, "--force-law", "linear",
            "--out", tmp_path)
        _, header, rows = read_csv(tmp_path / "trajectory_1d.csv")
        x0 = sample_initial_1d(25, 3)
        params = Sim1DParams(0.07, Predator1D(0.4, 0.2, 2.0, "linear"))
        traj, _ = simulate_1d(x0, params)
        assert len(rows) == traj.steps + 1 and len(header) == 25 + 3
        states = np.array([[float(v) for v in r[3:]] for r in rows])
        np.testing.assert_array_equal(states, traj.states)
        np.testing.assert_array_equal(numbers(rows, 2), traj.escape_distances)
        np.testing.assert_array_equal([int(r[1]) for r in rows], traj.component_counts)

    def test_explicit_state_and_sign_law(self, tmp_path, capsys):
        code, out, _ = run(capsys, "simulate-1d", "--x0", "0.5", "--xp", 0.6, "--force-law", "sign", "--out", tmp_path)
        assert code == 0
        report = json.loads((tmp_path / "summary_1d.json").read_text())["report"]
        assert report["d_ss"] == pytest.approx(2.1)

    def test_empty_trajectory(self, tmp_path, capsys):
        code, _, _ = run(capsys, "simulate-1d", "--n", 4, "--t-max", 0, "--out", tmp_path)
        assert code == 0
        prov, header, rows = read_csv(tmp_path / "trajectory_1d.csv")
        assert header == ["t", "m", "d_rho", "x_0", "x_1", "x_2", "x_3"] and rows == []
        assert prov["t_max"] == 0

    def test_x0_length_conflict(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-1d", "--x0", "0.1,0.2", "--n", 3, "--out", tmp_path)
        assert code == 1 and "x0" in err

    def test_non_finite_is_runtime_failure(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-1d", "--x0", "1e308,1.7e308", "--rho", 1e309, "--out", tmp_path)
        # rho=inf averages the two huge values and overflows
        assert code == 2 and "simulation failed" in err and "step 1" in err

    def test_critical_strength_precondition(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-1d", "--rho-p", -1, "--out", tmp_path)
        assert code == 1 and "rho_p" in err


class TestSimulateFlock:
    def test_happy_path(self, tmp_path, capsys):
        code, _, _ = run(capsys, "simulate-flock", "--n", 20, "--horizon", 1.0, "--snapshot-stride", 10,
                         "--out", tmp_path)
        assert code == 0
        prov, header, rows = read_csv(tmp_path / "flock_series.csv")
        assert header == ["t", "m", "dbar", "dcheck", "min_agent_index"]
        assert len(rows) == 21
        assert all(cell(r[3]) <= cell(r[2]) for r in rows)
        snaps = sorted(p.name for p in (tmp_path / "snapshots").iterdir())
        assert snaps == ["snap_0.csv", "snap_10.csv", "snap_20.csv"]
        sprov, sheader, srows = read_csv(tmp_path / "snapshots" / "snap_20.csv")
        assert sheader == ["agent", "rx", "ry", "rz", "vx", "vy", "vz"]
        assert len(srows) == 21 and srows[-1][0] == "p"
        assert [cell(v) for v in srows[-1][1:4]] == pytest.approx([-20, -20, 0])
        assert sprov == prov
        summary = json.loads((tmp_path / "summary_flock.json").read_text())
        assert summary["config"] == prov and summary["series"]["steps"] == 21

    def test_two_dimensional(self, tmp_path, capsys):
        code, _, _ = run(capsys, "simulate-flock", "--n", 5, "--dim", 2, "--horizon", 0.5,
                         "--predator-position=-30,-30", "--predator-velocity=10,10", "--out", tmp_path)
        assert code == 0

    def test_predator_dimension_mismatch(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-flock", "--n", 5, "--dim", 2, "--predator-position=-30,-30,0",
                           "--predator-velocity=10,10,0", "--out", tmp_path)
        assert code == 1 and "dim" in err

    def test_zero_dt(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-flock", "--dt", 0, "--out", tmp_path)
        assert code == 1 and "dt must be > 0" in err
        assert not (tmp_path / "flock_series.csv").exists()


class TestSweep:
    args = ("sweep", "--n", 10, "--grid", "0,0.1,0.5", "--trials", 3, "--seed", 11)

    def test_outputs(self, tmp_path, capsys):
        code, out, _ = run(capsys, *self.args, "--out", tmp_path)
        assert code == 0 and "rho_star=" in out
        prov, header, rows = read_csv(tmp_path / "sweep_summary.csv")
        assert header == ["rho", "mean_objective", "std_objective", "mean_clusters", "trials_ok", "trials_failed"]
        assert numbers(rows, 0) == [0.0, 0.1, 0.5]
        doc = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert set(doc) >= {"config", "rho_star", "records", "version"}
        assert doc["config"] == prov and prov["seed"] == 11
        assert doc["rho_star"] in (0.0, 0.1, 0.5)
        assert [r["mean_objective"] for r in doc["records"]] == numbers(rows, 1)

    def test_byte_identical_reruns(self, tmp_path, capsys):
        run(capsys, *self.args, "--out", tmp_path / "a")
        run(capsys, *self.args, "--workers", 2, "--out", tmp_path / "b")
        for name in ("sweep_summary.csv", "sweep_summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_flock_mode(self, tmp_path, capsys):
        code, _, _ = run(capsys, "sweep", "--mode", "flock", "--n", 8, "--grid", "0,20", "--horizon", 0.5,
                         "--objective", "min_min_distance", "--out", tmp_path)
        assert code == 0
        doc = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert doc["config"]["sweep"]["objective"] == "min_min_distance"

    def test_incompatible_objective(self, tmp_path, capsys):
        code, _, err = run(capsys, *self.args, "--objective", "min_avg_distance", "--out", tmp_path)
        assert code == 1 and "objective" in err

    def test_descending_grid(self, tmp_path, capsys):
        code, _, err = run(capsys, "sweep", "--grid", "0.5,0.1", "--out", tmp_path)
        assert code == 1 and "ascending" in err


class TestConfigFiles:
    def test_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"command": "simulate-1d", "n": 6, "rho": 0.3, "seed": 2}))
        code, _, _ = run(capsys, "simulate-1d", "--config", cfg, "--rho", 0.05, "--out", tmp_path)
        assert code == 0
        prov, header, _ = read_csv(tmp_path / "trajectory_1d.csv")
        assert prov["rho"] == 0.05 and prov["n"] == 6 and prov["seed"] == 2 and len(header) == 9

    def test_partial_predator_filled_from_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"predator_1d": {"x_p": 0.3}}))
        run(capsys, "simulate-1d", "--config", cfg, "--n", 5, "--out", tmp_path)
        prov, _, _ = read_csv(tmp_path / "trajectory_1d.csv")
        assert prov["predator_1d"] == {"x_p": 0.3, "rho_p": 0.2, "s": 2.0, "force_law": "linear"}

    def test_unreadable_config(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate-1d", "--config", tmp_path / "missing.json")
        assert code == 1 and "cannot read config" in err

    def test_malformed_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        code, _, err = run(capsys, "simulate-1d", "--config", cfg)
        assert code == 1 and "JSON" in err

    def test_schema_violation(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"rho": "wide"}))
        code, _, err = run(capsys, "simulate-1d", "--config", cfg)
        assert code == 1 and "schema violation" in err and "rho" in err

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="schema violation"):
            RunConfig.resolve("simulate-1d", {"rhoo": 0.1})

    def test_command_mismatch(self):
        with pytest.raises(ConfigError):
            RunConfig.resolve("simulate-1d", {"command": "sweep"})

    def test_env_output_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
        code, _, _ = run(capsys, "simulate-1d", "--n", 2)
        assert code == 0 and (tmp_path / "env_out" / "trajectory_1d.csv").exists()

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, err = run(capsys, "simulate-1d", "--n", 2, "--out", blocker / "sub")
        assert code == 2 and "cannot write outputs" in err


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "bogus")
        assert code == 1 and "invalid choice" in err

    def test_missing_subcommand(self, capsys):
        code, _, err = run(capsys)
        assert code == 1 and "missing subcommand" in err

    def test_unknown_flag(self, capsys):
        code, _, err = run(capsys, "simulate-1d", "--warp", 9)
        assert code == 1 and "unrecognized" in err

    def test_console_script(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "swarm_escape.cli", "simulate-1d", "--n", "3", "--rho", "0.1", "--seed", "7",
             "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "trajectory_1d.csv").exists()
