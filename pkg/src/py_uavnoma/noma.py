"""Power-domain NOMA with successive interference cancellation.

Conventions:
    * gains, thresholds and interference are indexed by user id, either as a
      sequence (position = id) or as a mapping id -> value;
    * a ``NomaGroup`` lists users in SIC decoding order, weakest first, with
      ``coeffs`` aligned to that order;
    * rates are in bit/s/Hz (unit bandwidth).

The ``batch_*`` kernels work on gains already sorted in decoding order with
a leading batch axis. The scalar API is a thin layer on top of them, so both
paths produce identical numbers.
"""

from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from py_uavnoma.enums import SicMode
from py_uavnoma.errors import ContractError, DomainError
from py_uavnoma.models import ClusterSchedule, NomaGroup, RateReport

PerUser = Union[Sequence[float], Mapping[int, float], np.ndarray]

FRACTION_TOL = 1e-9
BISECTION_STEPS = 200


# ------------------------------
# Helpers
# ------------------------------
def _user_ids(values: PerUser) -> List[int]:
    if isinstance(values, Mapping):
        return sorted(int(u) for u in values)
    return list(range(len(values)))


def _take(values: Optional[PerUser], ids: Sequence[int], name: str):
    """Values of ``ids`` as an array aligned with ``ids``."""
    if values is None:
        return None
    if isinstance(values, Mapping):
        missing = [u for u in ids if u not in values]
        if missing:
            raise ContractError(f"{name} has no entry for user(s) {missing}")
        return np.array([float(values[u]) for u in ids])
    arr = np.asarray(values, dtype=float).ravel()
    bad = [u for u in ids if not 0 <= u < arr.size]
    if bad:
        raise ContractError(
            f"{name} has {arr.size} entries but user id(s) {bad} were requested"
        )
    return arr[list(ids)]


def _check_gains(g: np.ndarray) -> None:
    if g.size == 0:
        raise DomainError("at least one gain is required")
    if np.any(np.isnan(g)) or np.any(g < 0):
        raise DomainError("gains must be >= 0")


def _check_noise(noise: float) -> None:
    if not noise > 0:
        raise DomainError("noise power must be > 0")


def _exclusive_tail(coeffs: np.ndarray) -> np.ndarray:
    """tail[..., j] = sum of coeffs decoded after j."""
    suffix = np.cumsum(coeffs[..., ::-1], axis=-1)[..., ::-1]
    return np.concatenate([suffix[..., 1:], np.zeros_like(suffix[..., :1])], axis=-1)


def _as_batch(power, shape) -> np.ndarray:
    p = np.asarray(power, dtype=float)
    return p.reshape(p.shape + (1,) * (len(shape) - p.ndim))


# ------------------------------
# Vectorized kernels
# ------------------------------
def batch_sinr_matrix(
    sorted_gains: np.ndarray,
    sorted_coeffs: np.ndarray,
    power,
    noise: float,
    interference: Optional[np.ndarray] = None,
) -> np.ndarray:
    """SINR of every decoding stage at every receiver.

    Returns an array of shape (..., K, K) whose entry [..., j, i] is the
    SINR of user i's message at receiver j. Only i <= j is meaningful.
    """
    g = np.asarray(sorted_gains, dtype=float)
    a = np.broadcast_to(np.asarray(sorted_coeffs, dtype=float), g.shape)
    pg = _as_batch(power, g.shape) * g
    n_eff = noise if interference is None else noise + np.asarray(interference)
    n_eff = np.broadcast_to(n_eff, g.shape)
    tail = _exclusive_tail(a)
    num = a[..., None, :] * pg[..., :, None]
    den = pg[..., :, None] * tail[..., None, :] + n_eff[..., :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = num / den
    return np.nan_to_num(sinr, nan=0.0)


def batch_noma_rates(
    sorted_gains: np.ndarray,
    sorted_coeffs: np.ndarray,
    power,
    noise: float,
    interference: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Own-stage rates and SINRs, shape (..., K) each."""
    stages = batch_sinr_matrix(sorted_gains, sorted_coeffs, power, noise, interference)
    sinr = np.diagonal(stages, axis1=-2, axis2=-1)
    return np.log2(1.0 + sinr), sinr


def batch_outage(
    stage_sinrs: np.ndarray, thresholds: np.ndarray, mode: SicMode
) -> np.ndarray:
    """Outage flags (..., K) from a stage-SINR array (..., K, K).

    ``thresholds`` holds the QoS rate of each decoding position.
    """
    thr = np.asarray(thresholds, dtype=float)
    stage_rates = np.log2(1.0 + stage_sinrs)
    if SicMode(mode) == SicMode.IDEALIZED:
        own = np.diagonal(stage_rates, axis1=-2, axis2=-1)
        return own < np.broadcast_to(thr, own.shape)
    k = stage_rates.shape[-1]
    thr = np.broadcast_to(thr, stage_rates.shape[:-1])[..., None, :]
    below = stage_rates < thr
    lower = np.tril(np.ones((k, k), dtype=bool))
    return np.any(below & lower, axis=-1)


def _min_fill(gamma: np.ndarray, inv_snr: np.ndarray) -> np.ndarray:
    """Smallest coefficients giving every user an own-stage SINR of ``gamma``.

    Filled from the last-decoded user backwards:
    a_j = gamma (sum_{k>j} a_k + 1 / snr_j).
    """
    a = np.zeros_like(inv_snr)
    tail = np.zeros(inv_snr.shape[:-1])
    with np.errstate(invalid="ignore"):
        for j in reversed(range(inv_snr.shape[-1])):
            a[..., j] = np.where(gamma > 0, gamma * (tail + inv_snr[..., j]), 0.0)
            tail = tail + a[..., j]
    return a


def batch_max_min_coeffs(
    sorted_gains: np.ndarray,
    power,
    noise: float,
    interference: Optional[np.ndarray] = None,
    steps: int = BISECTION_STEPS,
) -> Tuple[np.ndarray, np.ndarray]:
    """Max-min power coefficients for gains sorted in decoding order.

    Bisection on the common SINR target gamma over [0, min_j snr_j]; the
    leftover power after the minimal fill goes to the first-decoded user,
    which raises no other user's interference.

    Returns:
        (coeffs with the same shape as ``sorted_gains``, gamma per batch row)
    """
    g = np.asarray(sorted_gains, dtype=float)
    pg = _as_batch(power, g.shape) * g
    n_eff = noise if interference is None else noise + np.asarray(interference)
    snr = pg / np.broadcast_to(n_eff, g.shape)
    inv_snr = np.divide(1.0, snr, out=np.full_like(snr, np.inf), where=snr > 0)
    lo = np.zeros(g.shape[:-1])
    hi = snr.min(axis=-1)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        fits = _min_fill(mid, inv_snr).sum(axis=-1) <= 1.0
        lo = np.where(fits, mid, lo)
        hi = np.where(fits, hi, mid)
    a = _min_fill(lo, inv_snr)
    a[..., 0] = 1.0 - a[..., 1:].sum(axis=-1)
    return a, lo


# ------------------------------
# Scalar API
# ------------------------------
def decoding_order(gains: PerUser) -> List[int]:
    """User ids sorted ascending by gain (ties broken by id)."""
    ids = _user_ids(gains)
    g = _take(gains, ids, "gains") if ids else np.zeros(0)
    _check_gains(g)
    return [ids[i] for i in np.argsort(g, kind="stable")]


def noma_rates(
    gains: PerUser,
    group: NomaGroup,
    noise: float,
    external_interference: Optional[PerUser] = None,
    thresholds: Optional[PerUser] = None,
    sic_mode: SicMode = SicMode.STRICT,
) -> RateReport:
    """Rates of every user of ``group`` under superposition coding and SIC.

    Args:
        gains: Power gains by user id
        group: Users in decoding order with their coefficients
        noise: Noise power (W)
        external_interference: Interference power (W) by user id
        thresholds: QoS rates by user id, used for the outage flags
        sic_mode: Outage accounting, see ``sic_outage``
    """
    ids = list(group.user_ids)
    if len(group.coeffs) != len(ids):
        raise ContractError("coeffs and user_ids must have the same length")
    g = _take(gains, ids, "gains")
    _check_gains(g)
    _check_noise(noise)
    interference = _take(external_interference, ids, "external_interference")
    thr = _take(thresholds, ids, "thresholds")
    thr = np.zeros(len(ids)) if thr is None else thr

    stages = batch_sinr_matrix(
        g, np.asarray(group.coeffs), group.total_power, noise, interference
    )
    own = np.diagonal(stages)
    report = RateReport(
        user_ids=ids,
        rates=np.log2(1.0 + own).tolist(),
        sinrs=own.tolist(),
        stage_sinrs=[stages[j, : j + 1].tolist() for j in range(len(ids))],
        thresholds=thr.tolist(),
    )
    flags = sic_outage(report, mode=sic_mode)
    report.outage = [flags[u] for u in ids]
    return report


def sic_outage(
    report: RateReport,
    thresholds: Optional[PerUser] = None,
    mode: SicMode = SicMode.IDEALIZED,
) -> Dict[int, bool]:
    """Outage decision per user id.

    ``idealized``: a user is in outage iff its own rate is below its
    threshold. ``strict``: a user is in outage iff any stage it decodes
    (earlier users' messages, then its own) falls below that stage's
    threshold. Reports without stage information fall back to ``idealized``.
    """
    ids = report.user_ids
    if thresholds is None:
        thr = np.asarray(report.thresholds or [0.0] * len(ids), dtype=float)
    else:
        thr = _take(thresholds, ids, "thresholds")
    if SicMode(mode) == SicMode.STRICT and report.stage_sinrs:
        flags = []
        for j, row in enumerate(report.stage_sinrs):
            stage_rates = np.log2(1.0 + np.asarray(row))
            flags.append(bool(np.any(stage_rates < thr[: j + 1])))
    else:
        flags = [bool(r < t) for r, t in zip(report.rates, thr)]
    return dict(zip(ids, flags))


def _check_fractions(f: np.ndarray) -> None:
    if np.any(np.isnan(f)) or np.any(f < 0):
        raise ContractError("time fractions must be >= 0")
    if abs(f.sum() - 1.0) > FRACTION_TOL:
        raise ContractError(f"time fractions must sum to 1, got {f.sum():.12g}")


def oma_rates(
    gains: PerUser,
    total_power: float,
    noise: float,
    slot_fractions: PerUser,
    thresholds: Optional[PerUser] = None,
) -> RateReport:
    """Orthogonal baseline: user k transmits alone at full power for f_k."""
    ids = _user_ids(gains)
    g = _take(gains, ids, "gains")
    _check_gains(g)
    _check_noise(noise)
    if len(slot_fractions) != len(ids):
        raise ContractError("slot_fractions must have one entry per user")
    f = _take(slot_fractions, ids, "slot_fractions")
    _check_fractions(f)
    thr = _take(thresholds, ids, "thresholds")
    thr = np.zeros(len(ids)) if thr is None else thr

    snr = total_power * g / noise
    rates = f * np.log2(1.0 + snr)
    return RateReport(
        user_ids=ids,
        rates=rates.tolist(),
        sinrs=snr.tolist(),
        thresholds=thr.tolist(),
        outage=(rates < thr).tolist(),
    )


def max_min_power_allocation(gains: PerUser, total_power: float, noise: float):
    """Coefficients maximizing the minimum NOMA rate, indexed by user id.

    Users are decoded in ascending gain order. The result sums to 1 and
    equalizes the own-stage rates of all users up to bisection accuracy.

    Returns:
        list for sequence input, dict for mapping input
    """
    order = decoding_order(gains)
    _check_noise(noise)
    g = _take(gains, order, "gains")
    coeffs, _ = batch_max_min_coeffs(g, total_power, noise)
    by_id = dict(zip(order, coeffs.tolist()))
    if isinstance(gains, Mapping):
        return by_id
    return [by_id[u] for u in range(len(order))]


def max_min_group(
    gains: PerUser,
    total_power: float,
    noise: float,
    user_ids: Optional[Sequence[int]] = None,
) -> NomaGroup:
    """A max-min ``NomaGroup`` over ``user_ids`` (all users when omitted)."""
    ids = list(user_ids) if user_ids is not None else _user_ids(gains)
    sub = dict(zip(ids, _take(gains, ids, "gains").tolist()))
    coeffs = max_min_power_allocation(sub, total_power, noise)
    order = decoding_order(sub)
    return NomaGroup(
        user_ids=order, coeffs=[coeffs[u] for u in order], total_power=total_power
    )


def oma_max_min_fractions(gains: PerUser, total_power: float, noise: float):
    """Time fractions that equalize OMA rates (f_k proportional to 1 / L_k).

    Falls back to equal fractions when some user has zero full-power rate.
    """
    ids = _user_ids(gains)
    g = _take(gains, ids, "gains")
    _check_gains(g)
    _check_noise(noise)
    full = np.log2(1.0 + total_power * g / noise)
    if np.any(full <= 0):
        f = np.full(len(ids), 1.0 / len(ids))
    else:
        f = (1.0 / full) / np.sum(1.0 / full)
    if isinstance(gains, Mapping):
        return dict(zip(ids, f.tolist()))
    return f.tolist()


def cluster_schedule(
    clusters: Sequence[NomaGroup],
    fractions: Sequence[float],
    gains: PerUser,
    noise: float,
    external_interference: Optional[PerUser] = None,
) -> Tuple[ClusterSchedule, Dict[int, float]]:
    """Hybrid NOMA/TDMA: each cluster gets a time fraction, NOMA inside.

    Returns:
        (schedule, effective rate per user id = fraction x NOMA rate)
    """
    if len(clusters) != len(fractions):
        raise ContractError("one time fraction per cluster is required")
    f = np.asarray(fractions, dtype=float)
    _check_fractions(f)
    seen: Dict[int, int] = {}
    for c, group in enumerate(clusters):
        for uid in group.user_ids:
            if uid in seen:
                raise ContractError(
                    f"user {uid} appears in clusters {seen[uid]} and {c}"
                )
            seen[uid] = c

    effective: Dict[int, float] = {}
    for group, share in zip(clusters, f):
        report = noma_rates(gains, group, noise, external_interference)
        for uid, rate in zip(report.user_ids, report.rates):
            effective[uid] = float(share) * rate
    schedule = ClusterSchedule(clusters=list(clusters), fractions=f.tolist())
    return schedule, effective

