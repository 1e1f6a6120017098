"""Tests for run orchestration, result files, comparison and the CLI."""

import json

import pandas as pd
import pytest
import yaml

from py_uavnoma.cli import EXIT_CONFIG, EXIT_OK, main
from py_uavnoma.config import load_scenario
from py_uavnoma.errors import ConfigError, ContractError
from py_uavnoma.learning import QTable
from py_uavnoma.runner import METRIC_COLUMNS, compare, load_run, run, write_comparison

FIXED = {
    "mode": "fixed",
    "seed": 4,
    "trials": 500,
    "mc": {"chunk_size": 100},
    "fixed": {
        "uav": {"position": [0, 0, 100]},
        "users": [{"position": [10, 0]}, {"position": [200, 50]}],
    },
}

TRAJECTORY = {
    "mode": "trajectory",
    "seed": 1,
    "trajectory": {
        "users": [{"position": [100, 0]}, {"position": [-300, 200]}],
        "T": 2.0,
        "delta": 0.5,
        "v_max": 600.0,
        "max_outer": 2,
    },
    "sweep": {"durations": [2.0], "instances": 1},
}

PLACEMENT = {
    "mode": "placement",
    "seed": 2,
    "learning": {
        "grid": {
            "x_bounds": [0, 300],
            "y_bounds": [0, 300],
            "z_bounds": [100, 300],
            "cell_size": [100, 100, 100],
            "n_uav": 1,
        },
        "users": [{"position": [50, 50]}, {"position": [250, 250]}],
        "hyper": {"episodes": 20, "steps": 5},
        "horizon": 5,
    },
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestRun:
    """Tests for ``run`` and its result files."""

    def test_fixed_run_files(self, tmp_path):
        manifest = run(load_scenario(FIXED), out_dir=tmp_path / "a", workers=1)
        assert manifest.outputs == ["manifest.json", "metrics.csv", "summary.json"]
        metrics = pd.read_csv(tmp_path / "a" / "metrics.csv")
        assert list(metrics.columns) == METRIC_COLUMNS
        assert set(metrics["seed"]) == {4}
        assert set(metrics["scenario_hash"]) == {manifest.scenario_hash}
        assert set(metrics["user_class"]) == {"user_0", "user_1", "all", "sum"}

    def test_reruns_are_byte_identical(self, tmp_path):
        scenario = load_scenario(FIXED)
        run(scenario, out_dir=tmp_path / "a", workers=1)
        run(scenario, out_dir=tmp_path / "b", workers=2)
        for name in ("metrics.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_default_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UAVNOMA_OUTPUT_DIR", str(tmp_path))
        manifest = run(load_scenario(FIXED), workers=1)
        expected = tmp_path / f"fixed-{manifest.scenario_hash[:12]}-4"
        assert (expected / "manifest.json").is_file()

    def test_trajectory_run(self, tmp_path):
        manifest = run(load_scenario(TRAJECTORY), out_dir=tmp_path, workers=1)
        waypoints = pd.read_csv(tmp_path / "waypoints_noma.csv")
        assert len(waypoints) == 5
        assert list(waypoints.columns[:2]) == ["scenario_hash", "seed"]
        assert "waypoints_oma.csv" in manifest.outputs
        sweep = pd.read_csv(tmp_path / "sweep.csv")
        assert {"instance_seed", "gap", "seed"} <= set(sweep.columns)
        metrics = pd.read_csv(tmp_path / "metrics.csv")
        assert set(metrics["policy"]) == {"noma", "oma"}
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["noma"]["constraint_violations"] == []
        assert "wall_time" not in summary["noma"]

    def test_placement_run(self, tmp_path):
        run(load_scenario(PLACEMENT), out_dir=tmp_path, workers=1)
        table = QTable.load(tmp_path / "qtable.json")
        assert len(table) > 0
        trace = pd.read_csv(tmp_path / "trace.csv")
        assert len(trace) == 5
        assert {"trace", "action", "reward"} <= set(trace.columns)
        metrics = pd.read_csv(tmp_path / "metrics.csv")
        assert set(metrics["policy"]) == {"q_learning", "static"}
        training = pd.read_csv(tmp_path / "training.csv")
        assert len(training) == 20


class TestCompare:
    """Tests for pairing the metrics of two runs."""

    def test_identical_runs(self, tmp_path):
        scenario = load_scenario(FIXED)
        run(scenario, out_dir=tmp_path / "a", workers=1)
        run(scenario, out_dir=tmp_path / "b", workers=1)
        result = compare(tmp_path / "a", tmp_path / "b", "outage")
        assert not result.hash_mismatch
        assert (result.table["gain"] == 0).all()
        assert len(result.table) == 3

    def test_hash_mismatch_flagged(self, tmp_path):
        run(load_scenario(FIXED), out_dir=tmp_path / "a", workers=1)
        run(load_scenario({**FIXED, "trials": 300}), out_dir=tmp_path / "b", workers=1)
        result = compare(tmp_path / "a", tmp_path / "b", "ergodic_rate")
        assert result.hash_mismatch
        assert result.table["hash_mismatch"].all()

    def test_absent_metric(self, tmp_path):
        run(load_scenario(FIXED), out_dir=tmp_path / "a", workers=1)
        with pytest.raises(ContractError):
            compare(tmp_path / "a", tmp_path / "a", "min_avg_rate")

    def test_policies_of_one_run(self, tmp_path):
        run(load_scenario(TRAJECTORY), out_dir=tmp_path, workers=1)
        result = compare(tmp_path, tmp_path, "min_avg_rate", "noma", "oma")
        assert len(result.table) == 1
        row = result.table.iloc[0]
        assert row["gain"] == pytest.approx(row["estimate_a"] - row["estimate_b"])
        path = write_comparison(result, tmp_path / "cmp")
        assert path.name == "compare_min_avg_rate.csv"

    def test_unfinished_run(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run(tmp_path)


class TestCli:
    """Tests for the command-line entry point."""

    def test_stochastic(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "fixed.yaml", FIXED)
        code = main(["stochastic", "--config", str(config), "--out", str(tmp_path / "run")])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert printed["seed"] == 4
        assert "wall_time" not in printed
        assert (tmp_path / "run" / "metrics.csv").is_file()

    def test_overrides(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "fixed.yaml", FIXED)
        out = tmp_path / "run"
        code = main(
            ["stochastic", "--config", str(config), "--out", str(out), "--seed", "9", "--trials", "50"]
        )
        assert code == EXIT_OK
        metrics = pd.read_csv(out / "metrics.csv")
        assert set(metrics["seed"]) == {9}
        assert set(metrics["trials"]) == {50}

    def test_invalid_config(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "bad.yaml", {**FIXED, "trials": 0})
        out = tmp_path / "run"
        out.mkdir()
        code = main(["stochastic", "--config", str(config), "--out", str(out)])
        assert code == EXIT_CONFIG
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["error"] == "ConfigError"
        assert payload["field"] == "trials"
        assert json.loads((out / "error.json").read_text()) == payload

    def test_mode_mismatch(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "fixed.yaml", FIXED)
        code = main(["trajectory", "--config", str(config)])
        assert code == EXIT_CONFIG
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["field"] == "mode"

    def test_compare(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "fixed.yaml", FIXED)
        for name in ("a", "b"):
            assert main(["stochastic", "--config", str(config), "--out", str(tmp_path / name)]) == 0
        code = main(["compare", str(tmp_path / "a"), str(tmp_path / "b"), "--metric", "outage"])
        assert code == EXIT_OK
        assert (tmp_path / "a" / "compare_outage.csv").is_file()
