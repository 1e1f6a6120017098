"""Q-learning for 3D UAV placement and movement over a grid world.

The framework runs in three steps: K-means on the users gives the initial
cells and clusters, Q-learning places the UAVs for static users, and a
second Q-learning stage moves them while the users random-walk.

Every UAV is an independent tabular learner. Its state is its own cell
(placement) or its own cell plus the grid cell of its users' centroid
(movement); all UAVs share one global reward, the minimum (or sum) of the
users' effective rates under hybrid NOMA/TDMA scheduling.
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from py_uavnoma.channel import link_gain_matrix
from py_uavnoma.clustering import KMeansResult, kmeans
from py_uavnoma.enums import Action, AlphaSchedule, ChannelMode, Objective
from py_uavnoma.errors import ConfigError, ContractError
from py_uavnoma.models import (
    ChannelParams,
    GridWorld,
    GroundUser,
    RandomWalkParams,
    RlHyper,
)
from py_uavnoma.noma import cluster_schedule, max_min_group

Cell = Tuple[int, int, int]
State = Tuple[int, ...]

N_ACTIONS = len(Action)
QTABLE_SCHEMA = 1


class LearningScenario(BaseModel):
    """Everything the placement and movement learners need."""

    model_config = ConfigDict(extra="forbid")

    grid: GridWorld = Field(default_factory=GridWorld)
    users: List[GroundUser] = Field(..., min_length=1)
    walk: Optional[RandomWalkParams] = Field(
        default=None, description="User mobility; static users when omitted"
    )
    channel: ChannelParams = Field(
        default_factory=lambda: ChannelParams(mode=ChannelMode.PROBABILISTIC_LOS)
    )
    power: float = Field(default=1.0, gt=0, description="Per-UAV power (W)")
    objective: Objective = Objective.MIN_RATE
    hyper: RlHyper = Field(default_factory=RlHyper)
    fading_in_evaluation: bool = Field(
        default=False, description="Draw fading when evaluating a policy"
    )
    horizon: int = Field(default=30, ge=1, description="Evaluation steps")
    eval_traces: int = Field(default=10, ge=1, description="Held-out user traces")


# ------------------------------
# Grid helpers
# ------------------------------
def _axes(grid: GridWorld):
    return (grid.x_bounds, grid.y_bounds, grid.z_bounds)


def cell_center(grid: GridWorld, cell: Sequence[int]) -> np.ndarray:
    return np.array(
        [lo + (i + 0.5) * c for (lo, _), i, c in zip(_axes(grid), cell, grid.cell_size)]
    )


def snap(grid: GridWorld, position: Sequence[float]) -> Cell:
    """Cell containing ``position`` (clipped into the grid)."""
    cell = []
    for (lo, _), x, c, n in zip(_axes(grid), position, grid.cell_size, grid.shape):
        cell.append(int(np.clip(np.floor((x - lo) / c), 0, n - 1)))
    return tuple(cell)


def all_cells(grid: GridWorld) -> Iterator[Cell]:
    nx, ny, nz = grid.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                yield (i, j, k)


def move(cell: Sequence[int], action: Action) -> Cell:
    return tuple(int(c + d) for c, d in zip(cell, Action(action).delta))


def legal_actions(grid: GridWorld, cell: Sequence[int]) -> List[Action]:
    """Actions keeping the UAV inside the grid; ``STAY`` is always legal."""
    shape = grid.shape
    legal = []
    for action in Action:
        nxt = move(cell, action)
        if all(0 <= c < n for c, n in zip(nxt, shape)):
            legal.append(action)
    return legal


def grid_hash(grid: GridWorld) -> str:
    return hashlib.sha256(grid.model_dump_json().encode()).hexdigest()


# ------------------------------
# Q-table
# ------------------------------
class QTable:
    """Per-UAV action values keyed by (uav, state).

    Unvisited states read as all-zero rows. The first three entries of a
    state are always the UAV's own cell, which drives action masking.
    """

    def __init__(self, grid: GridWorld, hyper: Optional[RlHyper] = None):
        self.grid = grid
        self.hyper = hyper or RlHyper()
        self.values: Dict[Tuple[int, State], np.ndarray] = {}
        self.visits: Dict[Tuple[int, State], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.values)

    def q(self, uav: int, state: State) -> np.ndarray:
        return self.values.get((uav, tuple(state)), np.zeros(N_ACTIONS))

    def row(self, uav: int, state: State) -> Tuple[np.ndarray, np.ndarray]:
        key = (uav, tuple(int(s) for s in state))
        if key not in self.values:
            self.values[key] = np.zeros(N_ACTIONS)
            self.visits[key] = np.zeros(N_ACTIONS, dtype=np.int64)
        return self.values[key], self.visits[key]

    def greedy(self, uav: int, state: State) -> Action:
        """Best legal action, lowest index on ties."""
        legal = legal_actions(self.grid, state[:3])
        values = self.q(uav, state)
        return max(legal, key=lambda a: (values[a], -int(a)))

    def to_dict(self) -> dict:
        entries = [
            {
                "uav": uav,
                "state": list(state),
                "values": self.values[(uav, state)].tolist(),
                "visits": self.visits[(uav, state)].tolist(),
            }
            for uav, state in sorted(self.values)
        ]
        return {
            "schema_version": QTABLE_SCHEMA,
            "grid_hash": grid_hash(self.grid),
            "grid": self.grid.model_dump(mode="json"),
            "hyper": self.hyper.model_dump(mode="json"),
            "entries": entries,
        }

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "QTable":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("schema_version") != QTABLE_SCHEMA:
            raise ConfigError(
                f"unsupported Q-table schema {data.get('schema_version')!r}",
                field="schema_version",
                constraint=f"schema_version == {QTABLE_SCHEMA}",
            )
        grid = GridWorld.model_validate(data["grid"])
        if grid_hash(grid) != data["grid_hash"]:
            raise ConfigError("Q-table grid hash mismatch", field="grid_hash")
        table = cls(grid, RlHyper.model_validate(data["hyper"]))
        for entry in data["entries"]:
            values, visits = table.row(entry["uav"], tuple(entry["state"]))
            values[:] = entry["values"]
            visits[:] = entry["visits"]
        return table


def q_update(
    qtable: QTable,
    uav: int,
    state: State,
    action: Action,
    r: float,
    next_state: State,
    hyper: Optional[RlHyper] = None,
) -> QTable:
    """One-step Q-learning update; ``inverse_visits`` uses alpha = 1 / n."""
    hyper = hyper or qtable.hyper
    values, visits = qtable.row(uav, state)
    visits[action] += 1
    if hyper.alpha_schedule == AlphaSchedule.INVERSE_VISITS:
        alpha = 1.0 / visits[action]
    else:
        alpha = hyper.alpha_q
    legal = legal_actions(qtable.grid, next_state[:3])
    future = max(qtable.q(uav, next_state)[a] for a in legal)
    values[action] = (1 - alpha) * values[action] + alpha * (r + hyper.gamma * future)
    return qtable


def epsilon_greedy(
    qtable: QTable, uav: int, state: State, epsilon: float, rng: np.random.Generator
) -> Action:
    """Uniform legal action with probability ``epsilon``, greedy otherwise."""
    if not 0 <= epsilon <= 1:
        raise ContractError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        legal = legal_actions(qtable.grid, state[:3])
        return legal[int(rng.integers(len(legal)))]
    return qtable.greedy(uav, state)


# ------------------------------
# Reward and user mobility
# ------------------------------
def reward(
    uav_positions: np.ndarray,
    users: np.ndarray,
    assignment: Sequence[int],
    channel: ChannelParams,
    objective: Objective = Objective.MIN_RATE,
    power: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Min or sum of the users' effective rates (bit/s/Hz).

    Each UAV serves its assigned users as one NOMA cluster with max-min
    coefficients; clusters share time equally, empty clusters get no slot.
    Gains are fading averaged unless ``rng`` is given.

    Args:
        uav_positions: (V, 3) UAV positions
        users: (U, 2) user positions
        assignment: UAV index per user
        channel: Channel constants
        objective: ``min_rate`` or ``sum_rate``
        power: Per-UAV transmit power (W)
        rng: Draw instantaneous gains from this generator
    """
    rates = user_rates(uav_positions, users, assignment, channel, power, rng)
    if len(rates) == 0:
        return 0.0
    if Objective(objective) == Objective.SUM_RATE:
        return float(rates.sum())
    return float(rates.min())


def user_rates(
    uav_positions: np.ndarray,
    users: np.ndarray,
    assignment: Sequence[int],
    channel: ChannelParams,
    power: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Effective rate of every user under the scheduling ``reward`` uses."""
    user_pos = np.asarray(users, dtype=float).reshape(-1, 2)
    if len(user_pos) == 0:
        return np.zeros(0)
    uavs = np.asarray(uav_positions, dtype=float).reshape(-1, 3)
    assignment = [int(v) for v in assignment]
    if len(assignment) != len(user_pos):
        raise ContractError("assignment needs one UAV index per user")
    gains = link_gain_matrix(uavs, user_pos, channel, rng=rng, mean=rng is None)
    own = {u: float(gains[u, v]) for u, v in enumerate(assignment)}

    members: Dict[int, List[int]] = {}
    for u, v in enumerate(assignment):
        members.setdefault(v, []).append(u)
    groups = [
        max_min_group(own, power, channel.noise_power, user_ids=ids)
        for _, ids in sorted(members.items())
    ]
    fractions = [1.0 / len(groups)] * len(groups)
    _, effective = cluster_schedule(groups, fractions, own, channel.noise_power)
    return np.array([effective[u] for u in range(len(user_pos))])


def _reflect(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    width = hi - lo
    if width <= 0:
        return np.full_like(x, lo)
    y = np.mod(x - lo, 2 * width)
    return lo + np.where(y > width, 2 * width - y, y)


def random_walk(
    positions: np.ndarray,
    params: RandomWalkParams,
    rng: np.random.Generator,
    bounds: Tuple[Tuple[float, float], Tuple[float, float]],
) -> np.ndarray:
    """One walk step for every user, reflecting at ``bounds``."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    moves = rng.random(len(pos)) < params.move_probability
    phi = rng.uniform(0.0, 2 * np.pi, size=len(pos))
    step = np.where(moves, params.step, 0.0)
    new = pos + step[:, None] * np.column_stack([np.cos(phi), np.sin(phi)])
    new[:, 0] = _reflect(new[:, 0], *bounds[0])
    new[:, 1] = _reflect(new[:, 1], *bounds[1])
    return new


def random_walk_step(
    user: Sequence[float],
    params: RandomWalkParams,
    rng: np.random.Generator,
    bounds: Tuple[Tuple[float, float], Tuple[float, float]],
) -> np.ndarray:
    return random_walk(np.asarray([user]), params, rng, bounds)[0]


# ------------------------------
# Environment
# ------------------------------
class _World:
    """Shared plumbing of training and evaluation."""

    def __init__(self, scenario: LearningScenario, cluster_seed: int):
        self.scenario = scenario
        self.grid = scenario.grid
        self.users = np.array([u.position for u in scenario.users], dtype=float)
        if len(self.users) < self.grid.n_uav:
            raise ConfigError(
                "placement needs at least one user per UAV",
                field="grid.n_uav",
                constraint="n_uav <= number of users",
            )
        self.clusters: KMeansResult = kmeans(self.users, self.grid.n_uav, seed=cluster_seed)
        z0 = (
            self.grid.initial_altitude
            if self.grid.initial_altitude is not None
            else self.grid.z_bounds[0]
        )
        self.initial_cells: List[Cell] = [
            snap(self.grid, (cx, cy, z0)) for cx, cy in self.clusters.centroids
        ]
        self.bounds = (self.grid.x_bounds, self.grid.y_bounds)
        self._cache: Dict[Tuple[Cell, ...], float] = {}

    def positions(self, cells: Sequence[Cell]) -> np.ndarray:
        return np.array([cell_center(self.grid, c) for c in cells])

    def nearest(self, cells: Sequence[Cell], users: np.ndarray) -> np.ndarray:
        uavs = self.positions(cells)
        d = np.hypot(
            users[:, None, 0] - uavs[None, :, 0], users[:, None, 1] - uavs[None, :, 1]
        )
        return np.argmin(d, axis=1)

    def reward(
        self,
        cells: Sequence[Cell],
        users: Optional[np.ndarray] = None,
        assignment: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> float:
        sc = self.scenario
        if users is None:
            key = tuple(cells)
            if rng is None and key in self._cache:
                return self._cache[key]
            value = reward(
                self.positions(cells),
                self.users,
                self.clusters.assignment,
                sc.channel,
                sc.objective,
                sc.power,
                rng,
            )
            if rng is None:
                self._cache[key] = value
            return value
        return reward(
            self.positions(cells), users, assignment, sc.channel, sc.objective, sc.power, rng
        )

    def movement_state(
        self, uav: int, cells: Sequence[Cell], users: np.ndarray, assignment: np.ndarray
    ) -> State:
        mine = users[assignment == uav]
        if len(mine):
            cx, cy = mine.mean(axis=0)
            centroid = snap(self.grid, (cx, cy, self.grid.z_bounds[0]))[:2]
        else:
            centroid = cells[uav][:2]
        return tuple(cells[uav]) + tuple(centroid)


# ------------------------------
# Training
# ------------------------------
class TrainingResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    qtable: QTable
    initial_cells: List[Cell]
    final_cells: List[Cell]
    episode_rewards: List[float] = Field(default_factory=list)
    clusters: KMeansResult
    mode: str


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    policy, walk = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(policy), np.random.default_rng(walk)


def _start_cells(world: _World, rng: np.random.Generator) -> List[Cell]:
    if not world.scenario.hyper.random_starts:
        return list(world.initial_cells)
    cells = list(all_cells(world.grid))
    return [cells[int(rng.integers(len(cells)))] for _ in range(world.grid.n_uav)]


def _greedy_placement(world: _World, qtable: QTable, steps: int) -> List[Cell]:
    cells = list(world.initial_cells)
    for _ in range(steps):
        actions = [qtable.greedy(v, cells[v]) for v in range(len(cells))]
        cells = [move(c, a) for c, a in zip(cells, actions)]
    return cells


def train_placement(scenario: LearningScenario, seed: int) -> TrainingResult:
    """Q-learning placement for static users."""
    world = _World(scenario, seed)
    hyper = scenario.hyper
    qtable = QTable(world.grid, hyper)
    rng, _ = _streams(seed)
    n_uav = world.grid.n_uav
    episode_rewards = []
    for episode in range(hyper.episodes):
        epsilon = hyper.epsilon(episode)
        cells = _start_cells(world, rng)
        total = 0.0
        for _ in range(hyper.steps):
            actions = [epsilon_greedy(qtable, v, cells[v], epsilon, rng) for v in range(n_uav)]
            nxt = [move(c, a) for c, a in zip(cells, actions)]
            r = world.reward(nxt)
            for v in range(n_uav):
                q_update(qtable, v, cells[v], actions[v], r, nxt[v], hyper)
            cells = nxt
            total += r
        episode_rewards.append(total / hyper.steps)
        if (episode + 1) % 100 == 0:
            logger.debug(f"placement episode {episode + 1}: mean reward {total / hyper.steps:.5f}")

    final = _greedy_placement(world, qtable, hyper.steps)
    logger.info(f"placement trained: {len(qtable)} states, final cells {final}")
    return TrainingResult(
        qtable=qtable,
        initial_cells=world.initial_cells,
        final_cells=final,
        episode_rewards=episode_rewards,
        clusters=world.clusters,
        mode="placement",
    )


def train_movement(scenario: LearningScenario, seed: int) -> TrainingResult:
    """Q-learning movement while users random-walk.

    A walk that never moves (zero step or zero move probability) is the
    placement problem and is delegated to ``train_placement``.
    """
    walk = scenario.walk
    if walk is None or walk.is_static:
        logger.info("static user walk, training placement instead")
        return train_placement(scenario, seed)

    world = _World(scenario, seed)
    hyper = scenario.hyper
    qtable = QTable(world.grid, hyper)
    rng, walk_rng = _streams(seed)
    n_uav = world.grid.n_uav
    episode_rewards = []
    cells = list(world.initial_cells)
    for episode in range(hyper.episodes):
        epsilon = hyper.epsilon(episode)
        cells = _start_cells(world, rng)
        users = world.users.copy()
        assignment = world.nearest(cells, users)
        total = 0.0
        for _ in range(hyper.steps):
            states = [world.movement_state(v, cells, users, assignment) for v in range(n_uav)]
            actions = [epsilon_greedy(qtable, v, states[v], epsilon, rng) for v in range(n_uav)]
            users = random_walk(users, walk, walk_rng, world.bounds)
            cells = [move(c, a) for c, a in zip(cells, actions)]
            assignment = world.nearest(cells, users)
            r = world.reward(cells, users, assignment)
            for v in range(n_uav):
                nxt = world.movement_state(v, cells, users, assignment)
                q_update(qtable, v, states[v], actions[v], r, nxt, hyper)
            total += r
        episode_rewards.append(total / hyper.steps)

    logger.info(f"movement trained: {len(qtable)} states")
    return TrainingResult(
        qtable=qtable,
        initial_cells=world.initial_cells,
        final_cells=cells,
        episode_rewards=episode_rewards,
        clusters=world.clusters,
        mode="movement",
    )


# ------------------------------
# Evaluation
# ------------------------------
class PolicyTrace(BaseModel):
    """Greedy rollout of a table: per-step rows plus aggregates."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: List[dict] = Field(default_factory=list)
    rewards: List[float] = Field(default_factory=list)
    mean_reward: float = 0.0
    user_rates: List[float] = Field(default_factory=list)
    paths: List[List[Cell]] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.rows, columns=["t", "uav", "x", "y", "z", "action", "reward"]
        )


def _rollout(
    world: _World,
    choose,
    horizon: int,
    seed: int,
) -> PolicyTrace:
    sc = world.scenario
    _, walk_rng = _streams(seed)
    fading_rng = np.random.default_rng(seed) if sc.fading_in_evaluation else None
    moving = sc.walk is not None and not sc.walk.is_static
    cells = list(world.initial_cells)
    users = world.users.copy()
    assignment = world.nearest(cells, users) if moving else world.clusters.assignment
    trace = PolicyTrace(paths=[[c] for c in cells])
    rate_sums = np.zeros(len(users))
    for t in range(horizon):
        actions = [choose(v, cells, users, assignment) for v in range(len(cells))]
        if moving:
            users = random_walk(users, sc.walk, walk_rng, world.bounds)
        cells = [move(c, a) for c, a in zip(cells, actions)]
        if moving:
            assignment = world.nearest(cells, users)
            r = world.reward(cells, users, assignment, rng=fading_rng)
        else:
            r = world.reward(cells, rng=fading_rng)
        rate_sums += user_rates(
            world.positions(cells), users, assignment, sc.channel, sc.power
        )
        trace.rewards.append(r)
        for v, (cell, action) in enumerate(zip(cells, actions)):
            x, y, z = cell_center(world.grid, cell)
            trace.rows.append(
                {"t": t, "uav": v, "x": x, "y": y, "z": z, "action": action.name, "reward": r}
            )
            trace.paths[v].append(cell)
    trace.mean_reward = float(np.mean(trace.rewards)) if trace.rewards else 0.0
    trace.user_rates = (rate_sums / max(horizon, 1)).tolist()
    return trace


def evaluate_policy(
    qtable: QTable,
    scenario: LearningScenario,
    horizon: Optional[int] = None,
    seed: int = 0,
    cluster_seed: Optional[int] = None,
) -> PolicyTrace:
    """Greedy (epsilon = 0) rollout of ``qtable`` from the K-means cells.

    ``seed`` drives the user walk and evaluation fading; ``cluster_seed``
    (default ``seed``) must match the one used for training so the rollout
    starts from the same K-means cells.
    """
    world = _World(scenario, seed if cluster_seed is None else cluster_seed)
    moving = scenario.walk is not None and not scenario.walk.is_static

    def choose(v, cells, users, assignment):
        if moving:
            return qtable.greedy(v, world.movement_state(v, cells, users, assignment))
        return qtable.greedy(v, cells[v])

    return _rollout(world, choose, horizon or scenario.horizon, seed)


def static_baseline(
    scenario: LearningScenario,
    horizon: Optional[int] = None,
    seed: int = 0,
    cluster_seed: Optional[int] = None,
) -> PolicyTrace:
    """Same rollout with every UAV held at its initial cell."""
    world = _World(scenario, seed if cluster_seed is None else cluster_seed)
    return _rollout(world, lambda *_: Action.STAY, horizon or scenario.horizon, seed)


def value_iteration(
    scenario: LearningScenario, gamma: Optional[float] = None, tol: float = 1e-12
) -> QTable:
    """Exact Q* of the single-UAV placement MDP (mean-gain reward)."""
    if scenario.grid.n_uav != 1:
        raise ContractError("value iteration is defined for a single UAV")
    gamma = scenario.hyper.gamma if gamma is None else gamma
    world = _World(scenario, cluster_seed=0)
    cells = list(all_cells(world.grid))
    index = {c: i for i, c in enumerate(cells)}
    successors = np.full((len(cells), N_ACTIONS), -1)
    rewards = np.zeros((len(cells), N_ACTIONS))
    for c in cells:
        for a in legal_actions(world.grid, c):
            nxt = move(c, a)
            successors[index[c], a] = index[nxt]
            rewards[index[c], a] = world.reward([nxt])
    legal = successors >= 0
    q = np.where(legal, 0.0, -np.inf)
    for _ in range(100_000):
        v = q.max(axis=1)
        updated = np.where(legal, rewards + gamma * v[np.maximum(successors, 0)], -np.inf)
        change = np.max(np.abs(updated[legal] - q[legal]))
        q = updated
        if change < tol:
            break
    table = QTable(world.grid, scenario.hyper.model_copy(update={"gamma": gamma}))
    for c in cells:
        values, _ = table.row(0, c)
        values[:] = np.where(legal[index[c]], q[index[c]], 0.0)
    # illegal actions are masked at selection time, zero is a placeholder
    return table
