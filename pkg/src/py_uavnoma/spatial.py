"""Stochastic-geometry scenarios and the Monte Carlo engine.

Three geometries are supported:

* ``DiscScenario``: one UAV above the center of a disc, M center users and M
  edge users paired into orthogonal two-user NOMA groups;
* ``PppScenario``: UAVs and users drawn from independent HPPPs in a finite
  window, each UAV serving up to K associated users, other UAVs acting as
  additive interference;
* ``FixedScenario``: one UAV and a fixed user set forming a single group.

Trials are split into chunks of ``McConfig.chunk_size``. Chunk ``i`` owns
three generators spawned from ``SeedSequence(seed)`` child ``i``: geometry,
fading and policy. Strategies that only differ in pairing or association
therefore see the same users and the same fading, and the result does not
depend on the number of workers.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from py_uavnoma.channel import link_gain_matrix, sample_gains
from py_uavnoma.enums import (
    AssociationPolicy,
    OmaScheme,
    PairingStrategy,
    PowerAllocation,
)
from py_uavnoma.errors import ConfigError, ContractError, DomainError
from py_uavnoma.models import (
    ChannelParams,
    DiscScenario,
    Estimate,
    FixedScenario,
    GroundUser,
    McConfig,
    PppScenario,
    UavNode,
    Window,
)
from py_uavnoma.noma import (
    batch_max_min_coeffs,
    batch_outage,
    batch_sinr_matrix,
)
from py_uavnoma.parallel import WorkerPool, chunk_seeds, chunk_sizes, chunk_streams

AnyScenario = Union[DiscScenario, PppScenario, FixedScenario]
Samples = Dict[str, np.ndarray]

Z_95 = float(stats.norm.ppf(0.975))


# ------------------------------
# Result types
# ------------------------------
class Association(BaseModel):
    """User-to-UAV assignment."""

    groups: Dict[int, List[int]] = Field(..., description="UAV -> user indices")
    partial: List[int] = Field(default_factory=list, description="UAVs below K")
    csi_cost: int = Field(default=0, description="Instantaneous CSI values used")


class McResult(BaseModel):
    """Monte Carlo estimates per user class.

    The per-trial samples are kept for paired comparisons but are not part
    of the serialized result.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    outage: Dict[str, Estimate] = Field(default_factory=dict)
    ergodic: Dict[str, Estimate] = Field(default_factory=dict)
    trials: int
    seed: int
    csi_cost: float = Field(default=0.0, description="Mean CSI values per trial")
    outage_samples: Dict[str, np.ndarray] = Field(default_factory=dict, exclude=True)
    ergodic_samples: Dict[str, np.ndarray] = Field(
        default_factory=dict, exclude=True
    )


def estimate(samples: np.ndarray) -> Estimate:
    """Mean and 95% normal-approximation CI, ignoring NaN trials."""
    x = np.asarray(samples, dtype=float)
    x = x[~np.isnan(x)]
    n = int(x.size)
    if n == 0:
        return Estimate(mean=math.nan, ci_halfwidth=math.nan, std_err=math.nan, count=0)
    std_err = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(
        mean=float(x.mean()), ci_halfwidth=Z_95 * std_err, std_err=std_err, count=n
    )


# ------------------------------
# Geometry
# ------------------------------
def _disc_radii(
    scenario: DiscScenario, rng: np.random.Generator, shape
) -> Tuple[np.ndarray, np.ndarray]:
    r_s, r_d = scenario.r_split, scenario.R_d
    r_center = r_s * np.sqrt(rng.random(shape))
    r_edge = np.sqrt(r_s**2 + (r_d**2 - r_s**2) * rng.random(shape))
    return r_center, r_edge


def sample_disc_users(
    scenario: DiscScenario, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """M uniform points in the inner disc and M in the outer annulus.

    Returns:
        (center_users, edge_users), each of shape (M, 2), relative to the
        point below the UAV
    """
    r_center, r_edge = _disc_radii(scenario, rng, scenario.M)
    phi = rng.uniform(0.0, 2 * np.pi, size=(2, scenario.M))
    center = np.column_stack([r_center * np.cos(phi[0]), r_center * np.sin(phi[0])])
    edge = np.column_stack([r_edge * np.cos(phi[1]), r_edge * np.sin(phi[1])])
    return center, edge


def sample_hppp(window: Window, density: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point process on ``window``; shape (count, 2)."""
    if not density > 0:
        raise DomainError("density must be > 0")
    count = rng.poisson(density * window.area)
    x = rng.uniform(window.x_min, window.x_max, size=count)
    y = rng.uniform(window.y_min, window.y_max, size=count)
    return np.column_stack([x, y])


# ------------------------------
# Pairing and association
# ------------------------------
def _horizontal_distance(points, origin) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, np.shape(points)[-1])
    o = np.asarray(origin, dtype=float)
    return np.hypot(p[:, 0] - o[0], p[:, 1] - o[1])


def pair_users(
    strategy: PairingStrategy,
    center_users,
    edge_users,
    uav_pos,
    rng: np.random.Generator,
) -> List[Tuple[int, int]]:
    """Perfect matching of center users to edge users.

    Args:
        strategy: ``random``, ``near_near`` or ``near_far``
        center_users: (M, 2) positions in the inner region
        edge_users: (M, 2) positions in the outer region
        uav_pos: UAV position (only x, y are used)
        rng: Generator for the random matching

    Returns:
        (center index, edge index) pairs, ordered by the center rank
    """
    d_c = _horizontal_distance(center_users, uav_pos)
    d_e = _horizontal_distance(edge_users, uav_pos)
    if d_c.size != d_e.size:
        raise ContractError(
            f"pairing needs equal groups, got {d_c.size} center and {d_e.size} edge"
        )
    strategy = PairingStrategy(strategy)
    if strategy == PairingStrategy.RANDOM:
        centers = np.arange(d_c.size)
        edges = rng.permutation(d_e.size)
    elif strategy == PairingStrategy.NEAR_NEAR:
        centers = np.argsort(d_c, kind="stable")
        edges = np.argsort(d_e, kind="stable")
    else:
        centers = np.argsort(d_c, kind="stable")
        edges = np.argsort(-d_e, kind="stable")
    return [(int(c), int(e)) for c, e in zip(centers, edges)]


def _pairing_orders(
    strategy: PairingStrategy,
    r_center: np.ndarray,
    r_edge: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise version of ``pair_users`` over a (trials, M) batch."""
    if strategy == PairingStrategy.RANDOM:
        base = np.broadcast_to(np.arange(r_center.shape[1]), r_center.shape)
        return base, rng.permuted(base, axis=1)
    order_c = np.argsort(r_center, axis=1, kind="stable")
    if strategy == PairingStrategy.NEAR_NEAR:
        return order_c, np.argsort(r_edge, axis=1, kind="stable")
    return order_c, np.argsort(-r_edge, axis=1, kind="stable")


def _as_uav_arrays(uavs) -> Tuple[np.ndarray, np.ndarray]:
    """Positions (V, 3) and effective powers P x G from nodes or an array."""
    if len(uavs) and isinstance(uavs[0], UavNode):
        pos = np.array([u.position for u in uavs], dtype=float)
        power = np.array([u.power * u.antenna_gain for u in uavs])
        return pos, power
    pos = np.asarray(uavs, dtype=float)
    if pos.size == 0:
        return np.zeros((0, 3)), np.zeros(0)
    pos = pos.reshape(-1, pos.shape[-1])
    if pos.shape[1] != 3:
        raise ContractError("UAV positions must be 3D")
    return pos, np.ones(len(pos))


def _as_user_array(users) -> np.ndarray:
    if len(users) and isinstance(users[0], GroundUser):
        return np.array([u.position for u in users], dtype=float)
    return np.asarray(users, dtype=float).reshape(-1, 2)


def associate_users(
    policy: AssociationPolicy,
    uavs: Union[Sequence[UavNode], np.ndarray],
    users: Union[Sequence[GroundUser], np.ndarray],
    K: int,
    channel: ChannelParams,
    rng: Optional[np.random.Generator] = None,
    power: Optional[np.ndarray] = None,
    gains: Optional[np.ndarray] = None,
) -> Association:
    """Greedy capacity-K association in order of each user's best metric.

    Users are visited from the best-served (closest UAV for ``k_nearest``)
    to the worst; each takes its best UAV that still has a free slot.

    Args:
        policy: ``k_nearest`` (distance only), ``mean_power`` (P G x mean gain)
            or ``max_sinr`` (instantaneous SINR, every other UAV interfering
            at full power)
        uavs: ``UavNode`` list or (V, 3) positions
        users: ``GroundUser`` list or (U, 2) positions
        K: Users per UAV
        channel: Channel constants
        rng: Generator for the instantaneous draws of ``max_sinr``
        power: Effective power P x G per UAV, overrides the node values
        gains: Instantaneous (U, V) gains to use instead of a fresh draw
    """
    uav_pos, uav_power = _as_uav_arrays(uavs)
    if len(uav_pos) == 0:
        raise ContractError("association needs at least one UAV")
    if power is not None:
        uav_power = np.broadcast_to(np.asarray(power, dtype=float), (len(uav_pos),))
    user_pos = _as_user_array(users)
    n_users, n_uavs = len(user_pos), len(uav_pos)

    policy = AssociationPolicy(policy)
    csi_cost = 0
    if policy == AssociationPolicy.K_NEAREST:
        metric = -np.hypot(
            user_pos[:, None, 0] - uav_pos[None, :, 0],
            user_pos[:, None, 1] - uav_pos[None, :, 1],
        )
    elif policy == AssociationPolicy.MEAN_POWER:
        metric = uav_power[None, :] * link_gain_matrix(
            uav_pos, user_pos, channel, mean=True
        )
    else:
        if gains is None:
            if rng is None:
                raise ContractError("max_sinr association needs an rng or gains")
            gains = link_gain_matrix(uav_pos, user_pos, channel, rng=rng)
        received = uav_power[None, :] * gains
        interference = received.sum(axis=1, keepdims=True) - received
        metric = received / (interference + channel.noise_power)
        csi_cost = n_users * n_uavs

    groups: Dict[int, List[int]] = {v: [] for v in range(n_uavs)}
    free = n_uavs * K
    for u in np.argsort(-metric.max(axis=1), kind="stable"):
        if free == 0:
            break
        for v in np.argsort(-metric[u], kind="stable"):
            if len(groups[int(v)]) < K:
                groups[int(v)].append(int(u))
                free -= 1
                break
    partial = [v for v, members in groups.items() if len(members) < K]
    return Association(groups=groups, partial=partial, csi_cost=csi_cost)


# ------------------------------
# Per-chunk simulation
# ------------------------------
def _fixed_coeffs(config: McConfig, size: int) -> np.ndarray:
    """Configured coefficients for a group of ``size`` users.

    Smaller (partial) groups take the leading coefficients rescaled to the
    configured total.
    """
    full = np.asarray(config.fixed_coeffs, dtype=float)
    head = full[:size]
    if size < full.size and head.sum() > 0:
        head = head * (full.sum() / head.sum())
    return head


def _oma_pair_rates(
    l_center: np.ndarray, l_edge: np.ndarray, scheme: OmaScheme
) -> Tuple[np.ndarray, np.ndarray]:
    if scheme == OmaScheme.EQUAL_SLOTS:
        return 0.5 * l_center, 0.5 * l_edge
    both = (l_center > 0) & (l_edge > 0)
    total = np.where(both, l_center + l_edge, 1.0)
    f_center = np.where(both, l_edge / total, 0.5)
    return f_center * l_center, (1.0 - f_center) * l_edge


def _disc_chunk(
    scenario: DiscScenario, config: McConfig, n: int, seed_seq
) -> Tuple[Samples, Samples, np.ndarray]:
    streams = chunk_streams(seed_seq)
    ch, power = scenario.channel, scenario.power
    r_center, r_edge = _disc_radii(scenario, streams.geometry, (n, scenario.M))
    g_center = sample_gains(r_center, scenario.h, ch, streams.fading)
    g_edge = sample_gains(r_edge, scenario.h, ch, streams.fading)

    order_c, order_e = _pairing_orders(
        PairingStrategy(config.pairing), r_center, r_edge, streams.policy
    )
    g_center = np.take_along_axis(g_center, order_c, axis=1)
    g_edge = np.take_along_axis(g_edge, order_e, axis=1)

    # decoding order inside each pair; ties keep the center user first
    swap = g_edge < g_center
    pair = np.stack([g_center, g_edge], axis=-1)
    sorted_g = np.where(swap[..., None], pair[..., ::-1], pair)
    t_c, t_e = config.threshold("center"), config.threshold("edge")
    thr = np.where(swap[..., None], [t_e, t_c], [t_c, t_e])

    if config.power_allocation == PowerAllocation.MAX_MIN:
        coeffs, _ = batch_max_min_coeffs(sorted_g, power, ch.noise_power)
    else:
        coeffs = np.broadcast_to(_fixed_coeffs(config, 2), sorted_g.shape)
    stages = batch_sinr_matrix(sorted_g, coeffs, power, ch.noise_power)
    rates = np.log2(1.0 + np.diagonal(stages, axis1=-2, axis2=-1))
    flags = batch_outage(stages, thr, config.sic_mode)

    rate_c = np.where(swap, rates[..., 1], rates[..., 0])
    rate_e = np.where(swap, rates[..., 0], rates[..., 1])
    out_c = np.where(swap, flags[..., 1], flags[..., 0]).astype(float)
    out_e = np.where(swap, flags[..., 0], flags[..., 1]).astype(float)

    full_c = np.log2(1.0 + power * g_center / ch.noise_power)
    full_e = np.log2(1.0 + power * g_edge / ch.noise_power)
    oma_c, oma_e = _oma_pair_rates(full_c, full_e, OmaScheme(config.oma))

    noma_sum = (rate_c + rate_e).sum(axis=1)
    oma_sum = (oma_c + oma_e).sum(axis=1)
    outage = {
        "center": out_c.mean(axis=1),
        "edge": out_e.mean(axis=1),
        "all": (out_c + out_e).mean(axis=1) / 2,
    }
    ergodic = {
        "center": rate_c.mean(axis=1),
        "edge": rate_e.mean(axis=1),
        "all": (rate_c + rate_e).mean(axis=1) / 2,
        "sum": noma_sum,
        "oma_sum": oma_sum,
        "noma_gain": noma_sum - oma_sum,
    }
    return outage, ergodic, np.zeros(n)


def _fixed_chunk(
    scenario: FixedScenario, config: McConfig, n: int, seed_seq
) -> Tuple[Samples, Samples, np.ndarray]:
    streams = chunk_streams(seed_seq)
    ch = scenario.channel
    uav = scenario.uav
    power = uav.power * uav.antenna_gain
    user_pos = _as_user_array(scenario.users)
    altitude = uav.position[2]
    horizontal = np.hypot(user_pos[:, 0] - uav.position[0], user_pos[:, 1] - uav.position[1])
    gains = sample_gains(
        np.broadcast_to(horizontal, (n, len(user_pos))), altitude, ch, streams.fading
    )

    order = np.argsort(gains, axis=1, kind="stable")
    sorted_g = np.take_along_axis(gains, order, axis=1)
    thr_user = np.array(
        [
            config.thresholds.get(f"user_{i}", u.threshold)
            for i, u in enumerate(scenario.users)
        ]
    )
    thr = thr_user[order]
    if config.power_allocation == PowerAllocation.MAX_MIN:
        coeffs, _ = batch_max_min_coeffs(sorted_g, power, ch.noise_power)
    else:
        coeffs = np.broadcast_to(_fixed_coeffs(config, len(user_pos)), sorted_g.shape)
    stages = batch_sinr_matrix(sorted_g, coeffs, power, ch.noise_power)
    rates_sorted = np.log2(1.0 + np.diagonal(stages, axis1=-2, axis2=-1))
    flags_sorted = batch_outage(stages, thr, config.sic_mode)

    rates = np.empty_like(rates_sorted)
    flags = np.empty_like(rates_sorted)
    np.put_along_axis(rates, order, rates_sorted, axis=1)
    np.put_along_axis(flags, order, flags_sorted.astype(float), axis=1)

    outage = {f"user_{i}": flags[:, i] for i in range(len(user_pos))}
    ergodic = {f"user_{i}": rates[:, i] for i in range(len(user_pos))}
    outage["all"] = flags.mean(axis=1)
    ergodic["all"] = rates.mean(axis=1)
    ergodic["sum"] = rates.sum(axis=1)
    return outage, ergodic, np.zeros(n)


def _ppp_trial(
    scenario: PppScenario, config: McConfig, streams
) -> Tuple[Dict[str, List[float]], Dict[str, List[float]], int]:
    """One PPP realization: per-class outage flags and rates of scored users."""
    ch = scenario.channel
    uavs = sample_hppp(scenario.window, scenario.lambda_v, streams.geometry)
    users = sample_hppp(scenario.window, scenario.lambda_u, streams.geometry)
    out: Dict[str, List[float]] = {}
    erg: Dict[str, List[float]] = {}
    if len(uavs) == 0 or len(users) == 0:
        return out, erg, 0

    uav_pos = np.column_stack([uavs, np.full(len(uavs), scenario.h)])
    p_eff = np.full(len(uavs), scenario.power * scenario.antenna_gain)
    gains = link_gain_matrix(uav_pos, users, ch, rng=streams.fading)
    received = p_eff[None, :] * gains
    assoc = associate_users(
        config.association,
        uav_pos,
        users,
        scenario.K,
        ch,
        rng=streams.policy,
        power=p_eff,
        gains=gains,
    )

    inner = scenario.window.inner()
    scored = (
        (users[:, 0] >= inner.x_min)
        & (users[:, 0] <= inner.x_max)
        & (users[:, 1] >= inner.y_min)
        & (users[:, 1] <= inner.y_max)
    )
    for v, members in assoc.groups.items():
        if not members:
            continue
        idx = np.array(members)
        g = gains[idx, v]
        interference = received[idx].sum(axis=1) - received[idx, v]
        order = np.argsort(g, kind="stable")
        g, interference, idx = g[order], interference[order], idx[order]
        if config.power_allocation == PowerAllocation.MAX_MIN:
            coeffs, _ = batch_max_min_coeffs(g, p_eff[v], ch.noise_power, interference)
        else:
            coeffs = _fixed_coeffs(config, len(idx))
        thr = np.array(
            [config.threshold(f"rank_{k + 1}") for k in range(len(idx))]
        )
        stages = batch_sinr_matrix(g, coeffs, p_eff[v], ch.noise_power, interference)
        rates = np.log2(1.0 + np.diagonal(stages))
        flags = batch_outage(stages, thr, config.sic_mode)
        for k, u in enumerate(idx):
            if not scored[u]:
                continue
            for name in (f"rank_{k + 1}", "all"):
                out.setdefault(name, []).append(float(flags[k]))
                erg.setdefault(name, []).append(float(rates[k]))
    return out, erg, assoc.csi_cost


def _ppp_chunk(
    scenario: PppScenario, config: McConfig, n: int, seed_seq
) -> Tuple[Samples, Samples, np.ndarray]:
    streams = chunk_streams(seed_seq)
    names = [f"rank_{k + 1}" for k in range(scenario.K)] + ["all"]
    outage = {name: np.full(n, np.nan) for name in names}
    ergodic = {name: np.full(n, np.nan) for name in names}
    csi = np.zeros(n)
    for t in range(n):
        out, erg, csi[t] = _ppp_trial(scenario, config, streams)
        for name, values in out.items():
            outage[name][t] = np.mean(values)
            ergodic[name][t] = np.mean(erg[name])
    return outage, ergodic, csi


_CHUNK_RUNNERS = {
    DiscScenario: _disc_chunk,
    PppScenario: _ppp_chunk,
    FixedScenario: _fixed_chunk,
}


# ------------------------------
# Engine
# ------------------------------
def _check_run(scenario: AnyScenario, config: McConfig, trials: int) -> None:
    if trials < 1:
        raise ConfigError("trials must be >= 1", field="trials", constraint="trials >= 1")
    if config.power_allocation != PowerAllocation.FIXED:
        return
    if isinstance(scenario, DiscScenario):
        size = 2
    elif isinstance(scenario, PppScenario):
        size = scenario.K
    else:
        size = len(scenario.users)
    if len(config.fixed_coeffs) != size:
        raise ConfigError(
            f"fixed_coeffs needs {size} entries, got {len(config.fixed_coeffs)}",
            field="mc.fixed_coeffs",
            constraint=f"len(fixed_coeffs) == {size}",
        )


def simulate(
    scenario: AnyScenario,
    config: McConfig,
    trials: int,
    seed: int,
    workers: int = 1,
) -> McResult:
    """Run ``trials`` realizations and estimate outage and ergodic rate."""
    _check_run(scenario, config, trials)
    runner = _CHUNK_RUNNERS[type(scenario)]
    sizes = chunk_sizes(trials, config.chunk_size)
    seeds = chunk_seeds(seed, len(sizes))
    logger.info(
        f"{type(scenario).__name__}: {trials} trials in {len(sizes)} chunk(s), "
        f"{workers} worker(s)"
    )
    jobs = [(i, (scenario, config, n, s)) for i, (n, s) in enumerate(zip(sizes, seeds))]
    with WorkerPool(workers=workers) as pool:
        chunks = pool.run(runner, jobs)

    outage_samples = {
        name: np.concatenate([c[0][name] for c in chunks]) for name in chunks[0][0]
    }
    ergodic_samples = {
        name: np.concatenate([c[1][name] for c in chunks]) for name in chunks[0][1]
    }
    csi = np.concatenate([c[2] for c in chunks])
    result = McResult(
        outage={k: estimate(v) for k, v in outage_samples.items()},
        ergodic={k: estimate(v) for k, v in ergodic_samples.items()},
        trials=trials,
        seed=seed,
        csi_cost=float(csi.mean()),
        outage_samples=outage_samples,
        ergodic_samples=ergodic_samples,
    )
    empty = trials - min((e.count for e in result.outage.values()), default=trials)
    if empty:
        logger.debug(f"{empty} trial(s) left some user class without samples")
    return result


def mc_outage(
    scenario: AnyScenario, config: McConfig, trials: int, seed: int, workers: int = 1
) -> McResult:
    """Outage probability per user class."""
    result = simulate(scenario, config, trials, seed, workers)
    return result.model_copy(update={"ergodic": {}, "ergodic_samples": {}})


def mc_ergodic_rate(
    scenario: AnyScenario, config: McConfig, trials: int, seed: int, workers: int = 1
) -> McResult:
    """Ergodic rate (bit/s/Hz) per user class."""
    result = simulate(scenario, config, trials, seed, workers)
    return result.model_copy(update={"outage": {}, "outage_samples": {}})


# ------------------------------
# Comparisons and tables
# ------------------------------
def paired_difference(
    result_a: McResult, result_b: McResult, metric: str, user_class: str
) -> Estimate:
    """Estimate of mean(a - b) from per-trial samples of the same seed."""
    if result_a.seed != result_b.seed or result_a.trials != result_b.trials:
        raise ContractError("paired comparison needs equal seed and trial count")
    attr = "outage_samples" if metric == "outage" else "ergodic_samples"
    try:
        a = getattr(result_a, attr)[user_class]
        b = getattr(result_b, attr)[user_class]
    except KeyError:
        raise ContractError(f"no {metric} samples for class {user_class!r}")
    return estimate(a - b)


def policy_label(scenario: AnyScenario, config: McConfig) -> str:
    if isinstance(scenario, DiscScenario):
        head = config.pairing.value
    elif isinstance(scenario, PppScenario):
        head = config.association.value
    else:
        head = "fixed"
    return f"{head}/{config.power_allocation.value}"


def results_frame(result: McResult, scenario_hash: str, policy: str) -> pd.DataFrame:
    """Long-format rows, one per (user class, metric)."""
    rows = []
    for metric, table in (("outage", result.outage), ("ergodic_rate", result.ergodic)):
        for user_class, est in table.items():
            rows.append(
                {
                    "scenario_hash": scenario_hash,
                    "policy": policy,
                    "user_class": user_class,
                    "metric": metric,
                    "estimate": est.mean,
                    "ci_halfwidth": est.ci_halfwidth,
                    "trials": result.trials,
                    "seed": result.seed,
                }
            )
    return pd.DataFrame(
        rows,
        columns=[
            "scenario_hash",
            "policy",
            "user_class",
            "metric",
            "estimate",
            "ci_halfwidth",
            "trials",
            "seed",
        ],
    )
