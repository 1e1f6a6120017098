"""Unit tests for scenario loading, validation and hashing."""

import pytest

from py_uavnoma.config import (
    is_stochastic,
    load_scenario,
    output_root,
    parse_scenario,
    scenario_hash,
)
from py_uavnoma.enums import ScenarioMode
from py_uavnoma.errors import ConfigError

DISC = {"mode": "disc", "seed": 1, "disc": {"R_d": 400.0}}
PLACEMENT = {
    "mode": "placement",
    "seed": 3,
    "learning": {"users": [{"position": [0, 0]}, {"position": [100, 0]}]},
}


class TestLoadScenario:
    """Tests for mapping validation."""

    def test_minimal_disc(self):
        scenario = load_scenario(DISC)
        assert scenario.mode == ScenarioMode.DISC
        assert scenario.trials == 10_000
        assert scenario.disc.r_split == 200.0
        assert scenario.block is scenario.disc
        assert is_stochastic(scenario)

    def test_r_split_out_of_range(self):
        with pytest.raises(ConfigError) as exc:
            load_scenario({**DISC, "disc": {"R_d": 400.0, "r_split": 500.0}})
        assert "0 < r_split < R_d" in str(exc.value)
        assert exc.value.field == "disc"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            load_scenario({**DISC, "disc": {"R_d": 400.0, "radius": 3}})
        assert exc.value.field == "disc.radius"

    def test_missing_seed(self):
        data = {k: v for k, v in DISC.items() if k != "seed"}
        with pytest.raises(ConfigError) as exc:
            load_scenario(data)
        assert exc.value.field == "seed"

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_range(self, seed):
        with pytest.raises(ConfigError):
            load_scenario({**DISC, "seed": seed})

    def test_zero_trials(self):
        with pytest.raises(ConfigError) as exc:
            load_scenario({**DISC, "trials": 0})
        assert exc.value.field == "trials"
        assert exc.value.constraint == "trials >= 1"

    def test_block_must_match_mode(self):
        with pytest.raises(ConfigError, match="needs exactly the 'disc' block"):
            load_scenario({"mode": "disc", "seed": 1, "ppp": {}})

    def test_extra_block(self):
        with pytest.raises(ConfigError):
            load_scenario({**DISC, "ppp": {}})

    def test_sweep_outside_trajectory(self):
        with pytest.raises(ConfigError, match="sweep"):
            load_scenario({**DISC, "sweep": {"durations": [10.0]}})

    def test_movement_needs_walk(self):
        with pytest.raises(ConfigError, match="walk"):
            load_scenario({**PLACEMENT, "mode": "movement"})

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            load_scenario([1, 2, 3])

    def test_channel_injected(self):
        scenario = load_scenario({**DISC, "channel": {"noise_power_dbm": -80.0}})
        assert scenario.disc.channel.noise_power == pytest.approx(1e-11)

    def test_block_channel_wins(self):
        data = {
            **DISC,
            "channel": {"beta0": 1e-4},
            "disc": {"channel": {"beta0": 1e-2}},
        }
        assert load_scenario(data).disc.channel.beta0 == 1e-2

    def test_trajectory_channel_without_fading(self):
        data = {
            "mode": "trajectory",
            "seed": 0,
            "channel": {"beta0_db": -30.0},
            "trajectory": {"users": [{"position": [0, 0]}]},
        }
        scenario = load_scenario(data)
        assert scenario.trajectory.channel.fading is False
        assert scenario.trajectory.channel.beta0 == pytest.approx(1e-3)

    def test_episodes_override(self):
        scenario = load_scenario(PLACEMENT, episodes=7)
        assert scenario.learning.hyper.episodes == 7

    def test_none_overrides_ignored(self):
        scenario = load_scenario(DISC, seed=None, trials=None)
        assert scenario.seed == 1
        assert scenario.trials == 10_000


class TestParseScenario:
    """Tests for YAML files."""

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "disc.yaml"
        path.write_text("mode: disc\nseed: 5\ntrials: 200\ndisc:\n  M: 2\n")
        scenario = parse_scenario(path, seed=9)
        assert scenario.seed == 9
        assert scenario.trials == 200
        assert scenario.disc.M == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            parse_scenario(tmp_path / "absent.yaml")
        assert exc.value.field == "config"

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("mode: [disc\n")
        with pytest.raises(ConfigError):
            parse_scenario(path)


class TestScenarioHash:
    """Tests for the canonical scenario hash."""

    def test_key_order_and_seed(self):
        a = load_scenario({"mode": "disc", "seed": 1, "disc": {"R_d": 400.0, "M": 3}})
        b = load_scenario({"disc": {"M": 3, "R_d": 400.0}, "seed": 2, "mode": "disc"})
        assert scenario_hash(a) == scenario_hash(b)
        assert len(scenario_hash(a)) == 64

    def test_output_excluded(self):
        a = load_scenario(DISC)
        b = load_scenario({**DISC, "output": "elsewhere"})
        assert scenario_hash(a) == scenario_hash(b)

    def test_content_changes_hash(self):
        a = load_scenario(DISC)
        b = load_scenario({**DISC, "trials": 500})
        assert scenario_hash(a) != scenario_hash(b)


class TestOutputRoot:
    """Tests for the output directory default."""

    def test_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("UAVNOMA_OUTPUT_DIR", str(tmp_path))
        assert output_root() == tmp_path

    def test_default(self, monkeypatch):
        monkeypatch.delenv("UAVNOMA_OUTPUT_DIR", raising=False)
        assert str(output_root()) == "runs"
