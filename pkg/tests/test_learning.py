"""Unit tests for Q-learning placement and movement."""

import json
import math

import numpy as np
import pytest

from py_uavnoma.enums import Action, AlphaSchedule, ChannelMode, Objective
from py_uavnoma.errors import ConfigError, ContractError
from py_uavnoma.learning import (
    LearningScenario,
    QTable,
    cell_center,
    epsilon_greedy,
    evaluate_policy,
    legal_actions,
    move,
    q_update,
    random_walk,
    random_walk_step,
    reward,
    snap,
    static_baseline,
    train_movement,
    train_placement,
    user_rates,
    value_iteration,
)
from py_uavnoma.models import (
    ChannelParams,
    GridWorld,
    GroundUser,
    RandomWalkParams,
    RlHyper,
)

LOS = ChannelParams(mode=ChannelMode.LOS_ONLY)


@pytest.fixture
def small_grid():
    """3 x 3 x 2 cells of 100 m."""
    return GridWorld(
        x_bounds=(0, 300),
        y_bounds=(0, 300),
        z_bounds=(100, 300),
        cell_size=(100, 100, 100),
    )


@pytest.fixture
def single_user_scenario():
    """One UAV, one user; the cell right above the user at the lowest level wins."""
    return LearningScenario(
        grid=GridWorld(
            x_bounds=(-150, 150),
            y_bounds=(-150, 150),
            z_bounds=(100, 300),
            cell_size=(100, 100, 100),
            n_uav=1,
            initial_altitude=200,
        ),
        users=[GroundUser(position=(90, 30))],
        channel=LOS,
        hyper=RlHyper(
            alpha_q=1.0,
            gamma=0.9,
            epsilon_start=1.0,
            epsilon_end=1.0,
            episodes=2000,
            steps=20,
            random_starts=True,
        ),
    )


@pytest.fixture
def walking_scenario():
    return LearningScenario(
        grid=GridWorld(
            x_bounds=(-150, 150),
            y_bounds=(-150, 150),
            z_bounds=(100, 300),
            cell_size=(100, 100, 100),
            n_uav=2,
        ),
        users=[
            GroundUser(position=(-100, -100)),
            GroundUser(position=(-90, -120)),
            GroundUser(position=(100, 100)),
            GroundUser(position=(120, 90)),
        ],
        walk=RandomWalkParams(step=20.0),
        channel=LOS,
        hyper=RlHyper(episodes=5, steps=5),
        horizon=6,
    )


class TestGrid:
    """Tests for cells and action masking."""

    def test_shape(self, small_grid):
        assert small_grid.shape == (3, 3, 2)

    def test_corner_actions(self, small_grid):
        assert legal_actions(small_grid, (0, 0, 0)) == [
            Action.PLUS_X,
            Action.PLUS_Y,
            Action.PLUS_Z,
            Action.STAY,
        ]

    def test_interior_actions(self, small_grid):
        assert len(legal_actions(small_grid, (1, 1, 0))) == 6

    def test_snap_and_center(self, small_grid):
        assert snap(small_grid, (150, 250, 120)) == (1, 2, 0)
        assert snap(small_grid, (-50, 999, 999)) == (0, 2, 1)
        np.testing.assert_allclose(cell_center(small_grid, (1, 2, 0)), [150, 250, 150])

    def test_move(self):
        assert move((1, 1, 1), Action.MINUS_Z) == (1, 1, 0)
        assert move((1, 1, 1), Action.STAY) == (1, 1, 1)


class TestQUpdate:
    """Tests for the tabular update and action selection."""

    def test_constant_alpha(self, small_grid):
        table = QTable(small_grid, RlHyper(alpha_q=0.5))
        q_update(table, 0, (0, 0, 0), Action.PLUS_X, 1.0, (1, 0, 0))
        assert table.q(0, (0, 0, 0))[Action.PLUS_X] == pytest.approx(0.5)

    def test_inverse_visits(self, small_grid):
        hyper = RlHyper(alpha_schedule=AlphaSchedule.INVERSE_VISITS)
        table = QTable(small_grid, hyper)
        q_update(table, 0, (0, 0, 0), Action.PLUS_X, 1.0, (1, 0, 0))
        assert table.q(0, (0, 0, 0))[Action.PLUS_X] == pytest.approx(1.0)
        q_update(table, 0, (0, 0, 0), Action.PLUS_X, 3.0, (1, 0, 0))
        assert table.q(0, (0, 0, 0))[Action.PLUS_X] == pytest.approx(2.0)
        assert table.visits[(0, (0, 0, 0))][Action.PLUS_X] == 2

    def test_future_uses_legal_actions(self, small_grid):
        table = QTable(small_grid, RlHyper(alpha_q=1.0, gamma=0.5))
        values, _ = table.row(0, (2, 0, 0))
        values[Action.PLUS_X] = 100.0  # illegal at the x edge
        values[Action.STAY] = 4.0
        q_update(table, 0, (1, 0, 0), Action.PLUS_X, 1.0, (2, 0, 0))
        assert table.q(0, (1, 0, 0))[Action.PLUS_X] == pytest.approx(3.0)

    def test_greedy_tie_lowest_index(self, small_grid):
        table = QTable(small_grid)
        rng = np.random.default_rng(0)
        assert epsilon_greedy(table, 0, (0, 0, 0), 0.0, rng) == Action.PLUS_X

    def test_greedy_skips_illegal(self, small_grid):
        table = QTable(small_grid)
        values, _ = table.row(0, (0, 0, 0))
        values[:] = -1.0
        values[Action.MINUS_X] = 10.0
        values[Action.STAY] = 0.5
        assert table.greedy(0, (0, 0, 0)) == Action.STAY

    def test_explore_stays_legal(self, small_grid):
        table = QTable(small_grid)
        rng = np.random.default_rng(1)
        legal = legal_actions(small_grid, (0, 0, 0))
        for _ in range(50):
            assert epsilon_greedy(table, 0, (0, 0, 0), 1.0, rng) in legal

    def test_epsilon_range(self, small_grid):
        with pytest.raises(ContractError):
            epsilon_greedy(QTable(small_grid), 0, (0, 0, 0), 1.5, np.random.default_rng())


class TestQTableFile:
    """Tests for Q-table persistence."""

    def test_round_trip(self, small_grid, tmp_path):
        table = QTable(small_grid, RlHyper(alpha_q=0.3))
        q_update(table, 1, (0, 0, 0), Action.PLUS_Y, 2.0, (0, 1, 0))
        loaded = QTable.load(table.save(tmp_path / "qtable.json"))
        np.testing.assert_array_equal(loaded.q(1, (0, 0, 0)), table.q(1, (0, 0, 0)))
        assert loaded.hyper.alpha_q == 0.3
        assert loaded.grid == small_grid

    def test_schema_mismatch(self, small_grid, tmp_path):
        path = QTable(small_grid).save(tmp_path / "qtable.json")
        data = json.loads(path.read_text())
        data["schema_version"] = 99
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError):
            QTable.load(path)

    def test_grid_hash_mismatch(self, small_grid, tmp_path):
        path = QTable(small_grid).save(tmp_path / "qtable.json")
        data = json.loads(path.read_text())
        data["grid_hash"] = "0" * 64
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError):
            QTable.load(path)


class TestReward:
    """Tests for the hybrid NOMA/TDMA reward."""

    def test_single_user(self):
        r = reward(np.array([[0, 0, 100]]), np.array([[0, 0]]), [0], LOS)
        assert r == pytest.approx(math.log2(1 + 1e-7 / 1e-11))

    def test_shared_uav_equal_rates(self):
        uavs = np.array([[0, 0, 100]])
        users = np.array([[0, 0], [200, 0]])
        rates = user_rates(uavs, users, [0, 0], LOS)
        assert rates[0] == pytest.approx(rates[1], rel=1e-9)
        total = reward(uavs, users, [0, 0], LOS, objective=Objective.SUM_RATE)
        assert total == pytest.approx(2 * reward(uavs, users, [0, 0], LOS))

    def test_clusters_share_time(self):
        uavs = np.array([[0, 0, 100], [1000, 0, 100]])
        users = np.array([[0, 0], [1000, 0]])
        rates = user_rates(uavs, users, [0, 1], LOS)
        np.testing.assert_allclose(rates, 0.5 * math.log2(1 + 1e4))

    def test_empty_cluster_gets_no_slot(self):
        uavs = np.array([[0, 0, 100], [1000, 0, 100]])
        rates = user_rates(uavs, np.array([[0, 0]]), [0], LOS)
        assert rates[0] == pytest.approx(math.log2(1 + 1e4))

    def test_assignment_length(self):
        with pytest.raises(ContractError):
            reward(np.array([[0, 0, 100]]), np.array([[0, 0], [1, 1]]), [0], LOS)


class TestRandomWalk:
    """Tests for user mobility."""

    bounds = ((-100.0, 100.0), (-100.0, 100.0))

    def test_stays_in_bounds(self):
        rng = np.random.default_rng(0)
        pos = np.zeros((20, 2))
        params = RandomWalkParams(step=30.0)
        for _ in range(200):
            pos = random_walk(pos, params, rng, self.bounds)
            assert np.all(np.abs(pos) <= 100.0)

    def test_zero_step(self):
        pos = np.array([[10.0, -20.0], [50.0, 60.0]])
        new = random_walk(pos, RandomWalkParams(step=0.0), np.random.default_rng(1), self.bounds)
        np.testing.assert_allclose(new, pos)

    def test_step_length(self):
        pos = np.zeros((5, 2))
        new = random_walk(pos, RandomWalkParams(step=7.0), np.random.default_rng(2), self.bounds)
        np.testing.assert_allclose(np.hypot(new[:, 0], new[:, 1]), 7.0)

    def test_single_user_step_reflects(self):
        params = RandomWalkParams(step=50.0)
        for seed in range(20):
            new = random_walk_step((95.0, -95.0), params, np.random.default_rng(seed), self.bounds)
            assert new.shape == (2,)
            assert np.all(np.abs(new) <= 100.0)

    def test_single_user_matches_batch(self):
        params = RandomWalkParams(step=7.0)
        one = random_walk_step((10.0, 20.0), params, np.random.default_rng(4), self.bounds)
        batch = random_walk(
            np.array([[10.0, 20.0]]), params, np.random.default_rng(4), self.bounds
        )
        np.testing.assert_array_equal(one, batch[0])


class TestPlacement:
    """Tests for placement training against exact values."""

    @pytest.mark.slow
    def test_matches_value_iteration(self, single_user_scenario):
        trained = train_placement(single_user_scenario, seed=3)
        exact = value_iteration(single_user_scenario)
        assert trained.initial_cells == [(2, 1, 1)]
        assert trained.final_cells == [(2, 1, 0)]

        a = evaluate_policy(trained.qtable, single_user_scenario, seed=5, cluster_seed=3)
        b = evaluate_policy(exact, single_user_scenario, seed=5, cluster_seed=0)
        assert a.mean_reward == pytest.approx(b.mean_reward, abs=1e-9)

        r_max = max(a.rewards)
        bound = r_max / (1 - single_user_scenario.hyper.gamma)
        assert all(v.max() <= bound + 1e-9 for v in trained.qtable.values.values())

        start = (2, 1, 1)
        legal = legal_actions(single_user_scenario.grid, start)
        np.testing.assert_allclose(
            trained.qtable.q(0, start)[legal], exact.q(0, start)[legal], rtol=1e-3
        )

    def test_learns_best_altitude(self):
        """Blocked low links push the UAV up, free-space loss caps the climb."""
        scenario = LearningScenario(
            grid=GridWorld(
                x_bounds=(250, 350),
                y_bounds=(-50, 50),
                z_bounds=(50, 350),
                cell_size=(100, 100, 100),
                n_uav=1,
            ),
            users=[GroundUser(position=(0, 0))],
            channel=ChannelParams(mode=ChannelMode.PROBABILISTIC_LOS, kappa_nlos=1e-4),
            hyper=RlHyper(
                alpha_q=1.0,
                gamma=0.5,
                epsilon_start=1.0,
                epsilon_end=1.0,
                episodes=200,
                steps=10,
            ),
        )
        users = np.array([[0.0, 0.0]])
        by_level = [
            reward(cell_center(scenario.grid, (0, 0, k))[None, :], users, [0], scenario.channel)
            for k in range(3)
        ]
        best = int(np.argmax(by_level))
        trained = train_placement(scenario, seed=1)
        assert best != 0
        assert trained.initial_cells == [(0, 0, 0)]
        assert trained.final_cells[0][2] == best

    def test_needs_a_user_per_uav(self, small_grid):
        scenario = LearningScenario(
            grid=small_grid.model_copy(update={"n_uav": 2}),
            users=[GroundUser(position=(10, 10))],
        )
        with pytest.raises(ConfigError):
            train_placement(scenario, seed=0)

    def test_value_iteration_single_uav_only(self, walking_scenario):
        with pytest.raises(ContractError):
            value_iteration(walking_scenario)

    def test_static_baseline_holds_cells(self, single_user_scenario):
        trace = static_baseline(single_user_scenario, horizon=4)
        frame = trace.to_frame()
        assert len(frame) == 4
        assert set(frame["action"]) == {"STAY"}
        assert frame[["x", "y", "z"]].drop_duplicates().shape[0] == 1
        assert len(set(trace.rewards)) == 1


class TestMovement:
    """Tests for movement training and evaluation."""

    def test_static_walk_delegates(self, walking_scenario):
        scenario = walking_scenario.model_copy(
            update={"walk": RandomWalkParams(step=0.0)}
        )
        assert train_movement(scenario, seed=0).mode == "placement"

    def test_states_include_user_centroid(self, walking_scenario):
        result = train_movement(walking_scenario, seed=2)
        assert result.mode == "movement"
        assert len(result.qtable) > 0
        assert all(len(state) == 5 for _, state in result.qtable.values)
        assert len(result.episode_rewards) == 5

    def test_trace_stays_in_grid(self, walking_scenario):
        result = train_movement(walking_scenario, seed=2)
        trace = evaluate_policy(result.qtable, walking_scenario, seed=7, cluster_seed=2)
        frame = trace.to_frame()
        assert len(frame) == walking_scenario.horizon * 2
        assert frame["x"].between(-150, 150).all()
        assert frame["z"].between(100, 300).all()
        assert len(trace.user_rates) == 4

    def test_evaluation_reproducible(self, walking_scenario):
        result = train_movement(walking_scenario, seed=2)
        a = evaluate_policy(result.qtable, walking_scenario, seed=7, cluster_seed=2)
        b = evaluate_policy(result.qtable, walking_scenario, seed=7, cluster_seed=2)
        assert a.rewards == b.rewards
