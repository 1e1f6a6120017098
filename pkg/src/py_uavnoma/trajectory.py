"""Joint power allocation and trajectory design at a fixed altitude.

The UAV flies from ``start`` to ``end`` in N slots of length ``delta`` and
serves every user in every slot with NOMA. Rates are evaluated at the N + 1
waypoints and averaged; the objective is the minimum average user rate.

The optimizer alternates two blocks:

* powers for a fixed path (``power_subproblem``): the max-min point is found
  through the per-user dual weights. For a weight vector every slot is
  filled greedily, layer by layer, with the user whose weighted marginal
  rate is largest; the weights minimizing the resulting weighted sum
  (quasi-Newton over a softmax parametrization) equalize the average rates.
* the path for fixed powers (``trajectory_subproblem``): projected gradient
  ascent on a softmin of the average rates with backtracking.
"""

import math
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy import optimize, special

from py_uavnoma.channel import MIN_DISTANCE, path_gain
from py_uavnoma.enums import LinkType, MultipleAccess
from py_uavnoma.errors import ConfigError, ProjectionError, config_error_from
from py_uavnoma.models import FlightConfig, GroundUser, NomaGroup
from py_uavnoma.noma import batch_noma_rates, decoding_order, noma_rates
from py_uavnoma.parallel import WorkerPool

SLACK_TOL = 1e-9
SPEED_TOL = 1e-9
PROJECTION_SWEEPS = 100
FD_STEP = 1e-2
MIN_STEP = 1e-3


class TrajectorySolution(BaseModel):
    """Waypoints, powers and rates of one optimized flight."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    waypoints: np.ndarray = Field(..., description="(N+1, 2) positions (m)")
    powers: np.ndarray = Field(..., description="(K, N+1) transmit powers (W)")
    rates: np.ndarray = Field(..., description="(K, N+1) rates (bit/s/Hz)")
    min_avg_rate: float
    avg_rates: List[float]
    iterations: int
    converged: bool
    history: List[float] = Field(default_factory=list)
    scheme: MultipleAccess
    delta: float
    wall_time: float = 0.0

    def speeds(self) -> np.ndarray:
        """Speed on each of the N segments (m/s)."""
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1) / self.delta

    def to_frame(self) -> pd.DataFrame:
        """One row per waypoint: slot, x, y, speed, p_<k>, rate_<k>.

        ``speed`` is the speed on the segment leaving the waypoint (0 at the
        final waypoint).
        """
        frame = pd.DataFrame(
            {
                "slot": np.arange(len(self.waypoints)),
                "x": self.waypoints[:, 0],
                "y": self.waypoints[:, 1],
                "speed": np.append(self.speeds(), 0.0),
            }
        )
        for k in range(self.powers.shape[0]):
            frame[f"p_{k + 1}"] = self.powers[k]
        for k in range(self.rates.shape[0]):
            frame[f"rate_{k + 1}"] = self.rates[k]
        return frame

    def summary(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "min_avg_rate": self.min_avg_rate,
            "avg_rates": self.avg_rates,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
        }


# ------------------------------
# Geometry and rates
# ------------------------------
def _user_positions(config: FlightConfig) -> np.ndarray:
    return np.array([u.position for u in config.users], dtype=float)


def _check_feasible(config: FlightConfig) -> None:
    if config.n_slots < 2:
        raise ConfigError(
            "N = round(T / delta) must be >= 2", field="T", constraint="N >= 2"
        )
    if _slack(config) < -SLACK_TOL:
        raise ConfigError(
            "end is unreachable from start within T",
            field="T",
            constraint="||end - start|| <= v_max * T",
        )


def _slack(config: FlightConfig) -> float:
    return config.max_step * config.n_slots - math.dist(config.start, config.end)


def _gains(
    waypoints: np.ndarray, config: FlightConfig, users: Optional[np.ndarray] = None
) -> np.ndarray:
    """(S, K) LOS gains at every waypoint."""
    users = _user_positions(config) if users is None else users
    horizontal = np.linalg.norm(waypoints[:, None, :] - users[None, :, :], axis=2)
    distance = np.maximum(np.hypot(horizontal, config.altitude), MIN_DISTANCE)
    return np.asarray(path_gain(distance, LinkType.LOS, config.channel))


def _rate_matrix(
    waypoints: np.ndarray, slot_powers: np.ndarray, config: FlightConfig
) -> np.ndarray:
    """(S, K) NOMA rates for slot-major powers (S, K)."""
    g = _gains(waypoints, config)
    order = np.argsort(g, axis=1, kind="stable")
    g_sorted = np.take_along_axis(g, order, axis=1)
    p_sorted = np.take_along_axis(slot_powers, order, axis=1)
    used = p_sorted.sum(axis=1)
    coeffs = np.divide(
        p_sorted,
        used[:, None],
        out=np.zeros_like(p_sorted),
        where=used[:, None] > 0,
    )
    rates_sorted, _ = batch_noma_rates(
        g_sorted, coeffs, used, config.channel.noise_power
    )
    rates = np.empty_like(rates_sorted)
    np.put_along_axis(rates, order, rates_sorted, axis=1)
    return rates


def init_trajectory(config: FlightConfig) -> np.ndarray:
    """Straight line from start to end at uniform speed, shape (N+1, 2)."""
    _check_feasible(config)
    return np.linspace(config.start, config.end, config.n_slots + 1)


def slot_rates(
    q_n: Sequence[float],
    powers_n: Sequence[float],
    users: Sequence[GroundUser],
    config: FlightConfig,
) -> List[float]:
    """NOMA rate of every user (in ``users`` order) at one waypoint.

    Decoding order follows the gains at ``q_n``; coefficients are the powers
    normalized by the power in use.
    """
    positions = np.array([u.position for u in users], dtype=float)
    g = _gains(np.asarray([q_n], dtype=float), config, positions)[0]
    p = np.asarray(powers_n, dtype=float)
    used = float(p.sum())
    order = decoding_order(g.tolist())
    coeffs = [p[u] / used if used > 0 else 0.0 for u in order]
    group = NomaGroup(user_ids=order, coeffs=coeffs, total_power=used)
    report = noma_rates(g.tolist(), group, config.channel.noise_power)
    by_user = report.rates_by_user()
    return [by_user[k] for k in range(len(g))]


def evaluate(
    waypoints: np.ndarray, powers: np.ndarray, config: FlightConfig
) -> Tuple[float, List[float]]:
    """(min average rate, per-user average rates) for (K, N+1) powers."""
    rates = _rate_matrix(np.asarray(waypoints, dtype=float), np.asarray(powers).T, config)
    avg = rates.mean(axis=0)
    return float(avg.min()), avg.tolist()


def check_constraints(solution: TrajectorySolution, config: FlightConfig) -> List[str]:
    """Violated constraints of ``solution``; empty when it is feasible."""
    problems = []
    q = solution.waypoints
    if not np.array_equal(q[0], np.asarray(config.start, dtype=float)):
        problems.append("first waypoint differs from start")
    if not np.array_equal(q[-1], np.asarray(config.end, dtype=float)):
        problems.append("last waypoint differs from end")
    seg = np.linalg.norm(np.diff(q, axis=0), axis=1)
    if np.any(seg > config.max_step + SPEED_TOL):
        problems.append(f"segment length {seg.max():.9g} exceeds v_max * delta")
    if np.any(solution.powers < 0):
        problems.append("negative power")
    if np.any(solution.powers.sum(axis=0) > config.P_max * (1 + 1e-9)):
        problems.append("per-slot power exceeds P_max")
    return problems


# ------------------------------
# Power block
# ------------------------------
def _layered_allocation(
    sigma: np.ndarray, weights: np.ndarray, p_max: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy layer-by-layer power fill for every slot.

    ``sigma`` is the (S, K) noise-to-gain ratio. At power level z the layer
    goes to the user minimizing (sigma_k + z) / w_k; this is the weighted
    sum-rate optimum of the superposition region and automatically puts
    stronger users at lower levels, which is the SIC order. Users with
    identical lines split their interval into equal-rate pieces, the lowest
    id on top.

    Returns:
        (powers, rates), both (S, K)
    """
    n_slots, k_users = sigma.shape
    w = np.maximum(weights, 1e-300)
    i, j = np.triu_indices(k_users, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = (w[i] * sigma[:, j] - w[j] * sigma[:, i]) / (w[j] - w[i])
    cross = np.where(np.isfinite(cross) & (cross > 0) & (cross < p_max), cross, p_max)
    levels = np.sort(
        np.concatenate(
            [np.zeros((n_slots, 1)), cross, np.full((n_slots, 1), p_max)], axis=1
        ),
        axis=1,
    )

    powers = np.zeros_like(sigma)
    rates = np.zeros_like(sigma)
    rows = np.arange(n_slots)
    for b in range(levels.shape[1] - 1):
        z_a, z_b = levels[:, b], levels[:, b + 1]
        live = (z_b > z_a)[:, None]
        cost = (sigma + (0.5 * (z_a + z_b))[:, None]) / w
        best = cost.min(axis=1, keepdims=True)
        tie = cost <= best * (1 + 1e-12)
        m = tie.sum(axis=1)
        s = sigma[rows, np.argmax(tie, axis=1)]
        r = ((s + z_b) / (s + z_a)) ** (1.0 / m)
        piece = (m[:, None] - 1) - (np.cumsum(tie, axis=1) - 1)
        base = (s + z_a)[:, None]
        lower = base * r[:, None] ** piece - s[:, None]
        upper = base * r[:, None] ** (piece + 1) - s[:, None]
        take = tie & live
        powers += np.where(take, upper - lower, 0.0)
        rates += np.where(take, np.log2(r)[:, None], 0.0)
    return powers, rates


def power_subproblem(
    waypoints: np.ndarray,
    config: FlightConfig,
    current: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """Max-min powers for a fixed path.

    Args:
        waypoints: (N+1, 2) path
        config: Flight configuration
        current: Incoming (K, N+1) powers; returned unchanged when the new
            allocation would evaluate lower

    Returns:
        ((K, N+1) powers, achieved minimum average rate)
    """
    q = np.asarray(waypoints, dtype=float)
    g = _gains(q, config)
    sigma = config.channel.noise_power / g
    k_users = sigma.shape[1]

    if k_users == 1:
        powers = np.full(sigma.shape, config.P_max)
    else:

        def dual(theta: np.ndarray):
            w = special.softmax(theta)
            _, rates = _layered_allocation(sigma, w, config.P_max)
            avg = rates.mean(axis=0)
            value = float(w @ avg)
            return value, w * (avg - value)

        res = optimize.minimize(
            dual,
            np.zeros(k_users),
            jac=True,
            method="BFGS",
            options={"gtol": 1e-10, "maxiter": 500},
        )
        powers, _ = _layered_allocation(sigma, special.softmax(res.x), config.P_max)
        logger.debug(f"dual search: {res.nit} iterations, value {res.fun:.6g}")

    mu, _ = evaluate(q, powers.T, config)
    if current is not None:
        current_mu, _ = evaluate(q, current, config)
        if current_mu > mu:
            return np.asarray(current, dtype=float), current_mu
    return powers.T, mu


def oma_schedule(waypoints: np.ndarray, config: FlightConfig) -> np.ndarray:
    """One user per slot at full power, chosen leximin-greedily.

    Slots are visited in order; the served user is the one whose service
    leaves the lexicographically largest sorted vector of running totals.
    Ties go to the larger slot rate, then to the lower id.

    Returns:
        (K, N+1) powers
    """
    q = np.asarray(waypoints, dtype=float)
    g = _gains(q, config)
    full = np.log2(1.0 + config.P_max * g / config.channel.noise_power)
    n_slots, k_users = full.shape
    totals = np.zeros(k_users)
    powers = np.zeros((k_users, n_slots))
    for s in range(n_slots):
        best, best_key = 0, None
        for k in range(k_users):
            trial = totals.copy()
            trial[k] += full[s, k]
            key = (tuple(np.sort(trial)), full[s, k], -k)
            if best_key is None or key > best_key:
                best, best_key = k, key
        totals[best] += full[s, best]
        powers[best, s] = config.P_max
    return powers


def _oma_allocate(
    waypoints: np.ndarray, config: FlightConfig, current: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, float]:
    powers = oma_schedule(waypoints, config)
    mu, _ = evaluate(waypoints, powers, config)
    if current is not None:
        current_mu, _ = evaluate(waypoints, current, config)
        if current_mu > mu:
            return current, current_mu
    return powers, mu


# ------------------------------
# Trajectory block
# ------------------------------
def project_speed(waypoints: np.ndarray, max_step: float) -> np.ndarray:
    """Clamp segments to ``max_step`` with the endpoints held fixed.

    Each sweep visits the segments in order and pulls the free endpoint(s)
    of a too-long segment together.

    Raises:
        ProjectionError: some segment still exceeds the limit after the
            sweep budget
    """
    q = np.array(waypoints, dtype=float)
    last = len(q) - 1
    for _ in range(PROJECTION_SWEEPS):
        worst = 0.0
        for n in range(last):
            seg = q[n + 1] - q[n]
            length = float(np.hypot(seg[0], seg[1]))
            excess = length - max_step
            if excess <= SPEED_TOL * 0.1:
                continue
            worst = max(worst, excess)
            unit = seg / length
            if n == 0:
                q[1] -= unit * excess
            elif n + 1 == last:
                q[n] += unit * excess
            else:
                q[n] += unit * (excess / 2)
                q[n + 1] -= unit * (excess / 2)
        if worst == 0.0:
            return q
    raise ProjectionError(
        f"speed projection did not converge in {PROJECTION_SWEEPS} sweeps"
    )


def _softmin(avg: np.ndarray, tau: float) -> float:
    return float(-tau * special.logsumexp(-avg / tau))


def _smoothed(q: np.ndarray, slot_powers: np.ndarray, config: FlightConfig, tau: float):
    return _softmin(_rate_matrix(q, slot_powers, config).mean(axis=0), tau)


def _smoothed_gradient(
    q: np.ndarray, slot_powers: np.ndarray, config: FlightConfig, tau: float
) -> np.ndarray:
    """Gradient of the softmin objective w.r.t. every waypoint.

    The rate at waypoint n only depends on q[n], so one central difference
    per axis covers all waypoints at once.
    """
    avg = _rate_matrix(q, slot_powers, config).mean(axis=0)
    weights = special.softmax(-avg / tau)
    grad = np.zeros_like(q)
    for axis in range(2):
        plus, minus = q.copy(), q.copy()
        plus[:, axis] += FD_STEP
        minus[:, axis] -= FD_STEP
        d_rates = (
            _rate_matrix(plus, slot_powers, config)
            - _rate_matrix(minus, slot_powers, config)
        ) / (2 * FD_STEP)
        grad[:, axis] = d_rates @ weights / len(q)
    return grad


def trajectory_subproblem(
    powers: np.ndarray,
    waypoints: np.ndarray,
    config: FlightConfig,
    tau: Optional[float] = None,
    step: Optional[float] = None,
    iterations: Optional[int] = None,
) -> np.ndarray:
    """Projected gradient ascent on the softmin of the average rates.

    Args:
        powers: (K, N+1) powers held fixed
        waypoints: (N+1, 2) starting path
        config: Flight configuration
        tau: Softmin temperature (``config.tau`` when omitted)
        step: Largest waypoint move of a trial step in meters
        iterations: Gradient steps (``config.inner_steps`` when omitted)

    Returns:
        Updated (N+1, 2) waypoints; the input path when no step improves
    """
    tau = config.tau if tau is None else tau
    step = config.max_step if step is None else step
    iterations = config.inner_steps if iterations is None else iterations
    q = np.array(waypoints, dtype=float)
    if iterations <= 0 or _slack(config) <= SLACK_TOL:
        return q

    slot_powers = np.asarray(powers, dtype=float).T
    value = _smoothed(q, slot_powers, config, tau)
    for _ in range(iterations):
        grad = _smoothed_gradient(q, slot_powers, config, tau)
        grad[0] = grad[-1] = 0.0
        scale = float(np.linalg.norm(grad, axis=1).max())
        if scale <= 0:
            break
        direction = grad / scale
        trial = step
        improved = False
        while trial >= MIN_STEP:
            try:
                candidate = project_speed(q + trial * direction, config.max_step)
            except ProjectionError as e:
                logger.debug(f"step {trial:.4g} m rejected: {e}")
                trial /= 2
                continue
            candidate_value = _smoothed(candidate, slot_powers, config, tau)
            if candidate_value > value:
                q, value, improved = candidate, candidate_value, True
                break
            trial /= 2
        if not improved:
            break
    return q


# ------------------------------
# Alternating optimization
# ------------------------------
Allocator = Callable[..., Tuple[np.ndarray, float]]


def _alternate(
    config: FlightConfig, allocate: Allocator, scheme: MultipleAccess
) -> TrajectorySolution:
    started = time.perf_counter()
    q = init_trajectory(config)
    powers, objective = allocate(q, config)
    history = [objective]
    tau, step = config.tau, config.max_step
    converged = False
    iterations = 0
    for iterations in range(1, config.max_outer + 1):
        q_try = trajectory_subproblem(powers, q, config, tau=tau, step=step)
        p_try, obj_try = allocate(q_try, config, powers)
        if obj_try >= objective:
            gain = obj_try - objective
            q, powers, objective = q_try, p_try, obj_try
            history.append(objective)
            logger.debug(f"{scheme.value} iteration {iterations}: {objective:.6f}")
            if gain <= config.tol * max(abs(objective), 1e-12):
                converged = True
                break
        else:
            step /= 2
            if step < MIN_STEP:
                converged = True
                break
        if iterations % config.anneal_every == 0:
            tau *= config.anneal_factor

    rates = _rate_matrix(q, powers.T, config).T
    min_rate, avg_rates = evaluate(q, powers, config)
    elapsed = time.perf_counter() - started
    logger.info(
        f"{scheme.value}: min average rate {min_rate:.6f} after {iterations} "
        f"iteration(s) ({elapsed:.2f}s)"
    )
    return TrajectorySolution(
        waypoints=q,
        powers=powers,
        rates=rates,
        min_avg_rate=min_rate,
        avg_rates=avg_rates,
        iterations=iterations,
        converged=converged,
        history=history,
        scheme=scheme,
        delta=config.delta,
        wall_time=elapsed,
    )


def optimize_joint(config: FlightConfig) -> TrajectorySolution:
    """Alternate power and trajectory updates for the NOMA max-min rate."""
    return _alternate(config, power_subproblem, MultipleAccess.NOMA)


def oma_baseline(config: FlightConfig) -> TrajectorySolution:
    """Same alternation with one user served per slot at full power."""
    return _alternate(config, _oma_allocate, MultipleAccess.OMA)


# ------------------------------
# Instances and sweeps
# ------------------------------
def flight_config(**data) -> FlightConfig:
    """Validate a ``FlightConfig``, raising ``ConfigError`` on failure."""
    try:
        return FlightConfig.model_validate(data)
    except ValidationError as e:
        raise config_error_from(e, prefix="trajectory") from e


def sample_flight_config(n_users: int, seed: int, **overrides) -> FlightConfig:
    """Users uniform in [-500, 500]^2 m, flight from (0, 500) to (0, -500)."""
    rng = np.random.default_rng(seed)
    points = rng.uniform(-500.0, 500.0, size=(n_users, 2))
    users = [
        GroundUser(position=(float(x), float(y)), user_id=k)
        for k, (x, y) in enumerate(points)
    ]
    return flight_config(users=users, **overrides)


def _sweep_point(base: dict, duration: float, seed: Optional[int]) -> dict:
    data = dict(base, T=duration)
    if seed is None:
        config = flight_config(**data)
    else:
        n_users = len(data.pop("users"))
        config = sample_flight_config(n_users, seed, **data)
    noma = optimize_joint(config)
    oma = oma_baseline(config)
    return {
        "T": duration,
        "seed": seed,
        "noma_min_rate": noma.min_avg_rate,
        "oma_min_rate": oma.min_avg_rate,
        "noma_iterations": noma.iterations,
        "oma_iterations": oma.iterations,
    }


def duration_sweep(
    base: FlightConfig,
    durations: Sequence[float],
    seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """NOMA and OMA min-average rates per (T, seed).

    With ``seeds`` the users are redrawn per seed (same count as ``base``);
    without, the users of ``base`` are kept.
    """
    base_data = base.model_dump()
    seed_list: List[Optional[int]] = list(seeds) if seeds else [None]
    jobs = [
        ((t, s), (base_data, float(t), s)) for t in durations for s in seed_list
    ]
    with WorkerPool(workers=workers, processes=workers > 1) as pool:
        rows = pool.run(_sweep_point, jobs)
    return pd.DataFrame(rows)
