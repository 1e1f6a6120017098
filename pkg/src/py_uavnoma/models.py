"""Pydantic models shared across the simulation modules."""

import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from py_uavnoma.enums import (
    AlphaSchedule,
    AssociationPolicy,
    ChannelMode,
    LinkType,
    OmaScheme,
    PairingStrategy,
    PowerAllocation,
    SicMode,
)


class StrictModel(BaseModel):
    """Base for configuration blocks: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


# ------------------------------
# Channel
# ------------------------------
_DB_ALIASES = (
    # (alias, target, offset added before dB -> linear)
    ("beta0_db", "beta0", 0.0),
    ("kappa_nlos_db", "kappa_nlos", 0.0),
    ("noise_power_dbm", "noise_power", -30.0),
)


class ChannelParams(StrictModel):
    """Air-to-ground channel constants. All gains are linear."""

    beta0: float = Field(default=1e-3, gt=0, description="Path gain at 1 m")
    alpha_los: float = Field(default=2.0, ge=2.0, description="LOS exponent")
    alpha_nlos: float = Field(default=3.5, ge=2.0, description="NLOS exponent")
    kappa_nlos: float = Field(
        default=0.01, gt=0, le=1, description="Extra NLOS attenuation (linear)"
    )
    los_a: float = Field(default=9.61, gt=0, description="LOS sigmoid constant a")
    los_b: float = Field(default=0.16, gt=0, description="LOS sigmoid constant b")
    m: float = Field(default=1.0, ge=0.5, description="Nakagami shape")
    omega: float = Field(default=1.0, gt=0, description="Mean fading power")
    noise_power: float = Field(default=1e-11, gt=0, description="Noise power (W)")
    mode: ChannelMode = Field(default=ChannelMode.LOS_ONLY, description="LOS model")
    fading: bool = Field(default=True, description="Draw small-scale fading")

    @model_validator(mode="before")
    @classmethod
    def convert_db_fields(cls, data):
        """Accept ``beta0_db``, ``kappa_nlos_db`` and ``noise_power_dbm``."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for alias, target, offset in _DB_ALIASES:
            if alias not in data:
                continue
            if target in data:
                raise ValueError(f"give either {alias} or {target}, not both")
            data[target] = 10 ** ((float(data.pop(alias)) + offset) / 10)
        return data

    @model_validator(mode="after")
    def check_exponent_order(self) -> "ChannelParams":
        if self.alpha_nlos < self.alpha_los:
            raise ValueError("alpha_nlos >= alpha_los >= 2 is required")
        return self


class LinkSample(BaseModel):
    """One realized UAV-to-user link."""

    distance: float = Field(..., gt=0, description="3D distance (m)")
    elevation_deg: float = Field(..., ge=0, le=90, description="Elevation angle")
    link_type: LinkType = Field(..., description="Realized propagation state")
    path_gain: float = Field(..., ge=0, description="Large-scale gain")
    fading_gain: float = Field(..., ge=0, description="Small-scale power gain")

    @property
    def power_gain(self) -> float:
        return self.path_gain * self.fading_gain


# ------------------------------
# Nodes
# ------------------------------
class GroundUser(StrictModel):
    """A ground terminal."""

    position: Tuple[float, float] = Field(..., description="Ground position (m)")
    threshold: float = Field(default=0.0, ge=0, description="QoS rate (bit/s/Hz)")
    user_id: Optional[int] = Field(default=None, description="Stable identifier")


class UavNode(StrictModel):
    """An aerial base station."""

    position: Tuple[float, float, float] = Field(..., description="Position (m)")
    power: float = Field(default=1.0, gt=0, description="Transmit power budget (W)")
    antenna_gain: float = Field(
        default=1.0, gt=0, description="Scalar array/beamforming gain (linear)"
    )

    @field_validator("position")
    @classmethod
    def altitude_positive(cls, v: Tuple[float, float, float]):
        if v[2] <= 0:
            raise ValueError("UAV altitude must be > 0")
        return v


# ------------------------------
# NOMA
# ------------------------------
COEFF_TOL = 1e-9


class NomaGroup(BaseModel):
    """Co-channel users sharing one resource block through superposition.

    ``user_ids`` is the SIC decoding order (first entry decoded first at every
    receiver) and ``coeffs`` is aligned with it.
    """

    user_ids: List[int] = Field(..., min_length=1, description="Decoding order")
    coeffs: List[float] = Field(..., description="Power fractions, same order")
    total_power: float = Field(..., ge=0, description="Group power (W)")

    @model_validator(mode="after")
    def check_coefficients(self) -> "NomaGroup":
        if len(self.coeffs) != len(self.user_ids):
            raise ValueError("coeffs and user_ids must have the same length")
        if len(set(self.user_ids)) != len(self.user_ids):
            raise ValueError("user_ids must be unique")
        if any(a < 0 for a in self.coeffs):
            raise ValueError("power coefficients must be >= 0")
        if sum(self.coeffs) > 1 + COEFF_TOL:
            raise ValueError("power coefficients must sum to at most 1")
        return self


class RateReport(BaseModel):
    """Per-user outcome of one NOMA or OMA transmission, in decoding order."""

    user_ids: List[int] = Field(..., description="Decoding order")
    rates: List[float] = Field(..., description="Achievable rate (bit/s/Hz)")
    sinrs: List[float] = Field(..., description="SINR at the user's own stage")
    stage_sinrs: List[List[float]] = Field(
        default_factory=list,
        description="Row j: SINRs of stages 0..j at receiver j",
    )
    thresholds: List[float] = Field(default_factory=list, description="QoS rates")
    outage: List[bool] = Field(default_factory=list, description="Outage flags")

    def rate_of(self, user_id: int) -> float:
        return self.rates[self.user_ids.index(user_id)]

    def rates_by_user(self) -> Dict[int, float]:
        return dict(zip(self.user_ids, self.rates))

    def outage_by_user(self) -> Dict[int, bool]:
        return dict(zip(self.user_ids, self.outage))


class ClusterSchedule(BaseModel):
    """Hybrid access: NOMA inside clusters, TDMA between them."""

    clusters: List[NomaGroup] = Field(..., description="Clusters in slot order")
    fractions: List[float] = Field(..., description="Time share per cluster")


# ------------------------------
# Spatial scenarios
# ------------------------------
class Window(StrictModel):
    """Axis-aligned simulation window (m)."""

    x_min: float = -1000.0
    x_max: float = 1000.0
    y_min: float = -1000.0
    y_max: float = 1000.0

    @model_validator(mode="after")
    def check_order(self) -> "Window":
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("window needs x_min <= x_max and y_min <= y_max")
        return self

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def inner(self) -> "Window":
        """The central sub-window with half the side lengths."""
        cx = (self.x_min + self.x_max) / 2
        cy = (self.y_min + self.y_max) / 2
        hx = (self.x_max - self.x_min) / 4
        hy = (self.y_max - self.y_min) / 4
        return Window(x_min=cx - hx, x_max=cx + hx, y_min=cy - hy, y_max=cy + hy)


class DiscScenario(StrictModel):
    """Single UAV above the center of a disc with M center/edge user pairs."""

    R_d: float = Field(default=500.0, gt=0, description="Cell radius (m)")
    r_split: Optional[float] = Field(
        default=None, description="Radius separating D1 from D2 (default R_d/2)"
    )
    h: float = Field(default=100.0, gt=0, description="UAV altitude (m)")
    M: int = Field(default=4, ge=1, description="Number of user pairs")
    power: float = Field(default=1.0, gt=0, description="Transmit power (W)")
    channel: ChannelParams = Field(default_factory=ChannelParams)

    @model_validator(mode="after")
    def check_split(self) -> "DiscScenario":
        if self.r_split is None:
            self.r_split = self.R_d / 2
        if not 0 < self.r_split < self.R_d:
            raise ValueError("r_split violates 0 < r_split < R_d")
        return self


class PppScenario(StrictModel):
    """UAVs and users as independent HPPPs in a finite window."""

    window: Window = Field(default_factory=Window)
    lambda_u: float = Field(default=2e-5, gt=0, description="Users per m^2")
    lambda_v: float = Field(default=2e-6, gt=0, description="UAVs per m^2")
    h: float = Field(default=100.0, gt=0, description="UAV altitude (m)")
    K: int = Field(default=2, ge=1, description="Users per UAV")
    power: float = Field(default=1.0, gt=0, description="Per-UAV power (W)")
    antenna_gain: float = Field(default=1.0, gt=0, description="Per-UAV gain")
    channel: ChannelParams = Field(default_factory=ChannelParams)

    @model_validator(mode="after")
    def check_expected_points(self) -> "PppScenario":
        if self.window.area * min(self.lambda_u, self.lambda_v) < 1:
            raise ValueError("window area x density must be >= 1 expected point")
        return self


class FixedScenario(StrictModel):
    """One UAV serving a fixed set of users as a single NOMA group."""

    uav: UavNode
    users: List[GroundUser] = Field(..., min_length=1)
    channel: ChannelParams = Field(default_factory=ChannelParams)


class McConfig(StrictModel):
    """Grouping and power policy used by the Monte Carlo engine."""

    pairing: PairingStrategy = PairingStrategy.NEAR_NEAR
    association: AssociationPolicy = AssociationPolicy.K_NEAREST
    power_allocation: PowerAllocation = PowerAllocation.MAX_MIN
    fixed_coeffs: List[float] = Field(
        default_factory=lambda: [0.8, 0.2],
        description="Coefficients in decoding order (weakest user first)",
    )
    oma: OmaScheme = OmaScheme.EQUAL_SLOTS
    sic_mode: SicMode = SicMode.IDEALIZED
    thresholds: Dict[str, float] = Field(
        default_factory=lambda: {"default": 0.5},
        description="QoS rate per user class; 'default' is the fallback",
    )
    chunk_size: int = Field(default=10_000, ge=1, description="Trials per chunk")

    @field_validator("fixed_coeffs")
    @classmethod
    def check_fixed_coeffs(cls, v: List[float]) -> List[float]:
        if any(a < 0 for a in v) or sum(v) > 1 + COEFF_TOL:
            raise ValueError("fixed_coeffs must be >= 0 and sum to at most 1")
        return v

    def threshold(self, user_class: str) -> float:
        return self.thresholds.get(user_class, self.thresholds.get("default", 0.0))


class Estimate(BaseModel):
    """Sample mean with a 95% normal-approximation confidence interval."""

    mean: float
    ci_halfwidth: float
    std_err: float
    count: int


# ------------------------------
# Trajectory
# ------------------------------
class FlightConfig(StrictModel):
    """Fixed-altitude flight from ``start`` to ``end`` serving ground users."""

    start: Tuple[float, float] = (0.0, 500.0)
    end: Tuple[float, float] = (0.0, -500.0)
    altitude: float = Field(default=100.0, gt=0, description="Flight height (m)")
    T: float = Field(default=25.0, gt=0, description="Flight duration (s)")
    delta: float = Field(default=0.5, gt=0, description="Slot length (s)")
    v_max: float = Field(default=100.0, gt=0, description="Speed limit (m/s)")
    P_max: float = Field(default=0.1, gt=0, description="Transmit power (W)")
    users: List[GroundUser] = Field(..., min_length=1)
    channel: ChannelParams = Field(
        default_factory=lambda: ChannelParams(fading=False)
    )
    max_outer: int = Field(default=200, ge=0, description="Outer iterations")
    tol: float = Field(default=1e-4, gt=0, description="Relative improvement stop")
    tau: float = Field(default=0.05, gt=0, description="Softmin temperature")
    anneal_every: int = Field(default=20, ge=1)
    anneal_factor: float = Field(default=0.5, gt=0, le=1)
    inner_steps: int = Field(default=5, ge=0, description="Gradient steps/outer")

    @property
    def n_slots(self) -> int:
        return int(round(self.T / self.delta))

    @property
    def max_step(self) -> float:
        """Largest distance the UAV may cover between waypoints."""
        return self.v_max * self.delta

    @model_validator(mode="after")
    def check_feasible(self) -> "FlightConfig":
        if self.channel.mode != ChannelMode.LOS_ONLY or self.channel.fading:
            raise ValueError("trajectory design needs a los_only channel without fading")
        if self.n_slots < 2:
            raise ValueError("N = round(T / delta) must be >= 2")
        span = math.dist(self.start, self.end)
        if span > self.max_step * self.n_slots * (1 + 1e-12):
            raise ValueError("||end - start|| <= v_max * T is violated")
        return self


# ------------------------------
# Learning
# ------------------------------
class GridWorld(StrictModel):
    """3D box discretized into cells; UAVs sit on cell centers."""

    x_bounds: Tuple[float, float] = (-500.0, 500.0)
    y_bounds: Tuple[float, float] = (-500.0, 500.0)
    z_bounds: Tuple[float, float] = (50.0, 350.0)
    cell_size: Tuple[float, float, float] = (100.0, 100.0, 100.0)
    n_uav: int = Field(default=2, ge=1)
    initial_altitude: Optional[float] = Field(
        default=None, description="Start altitude; lowest level when omitted"
    )

    @model_validator(mode="after")
    def check_cells(self) -> "GridWorld":
        if any(c <= 0 for c in self.cell_size):
            raise ValueError("cell sizes must be > 0")
        for lo, hi in (self.x_bounds, self.y_bounds, self.z_bounds):
            if not hi > lo:
                raise ValueError("grid bounds must be nonempty")
        if any(n < 1 for n in self.shape):
            raise ValueError("every axis must hold at least one cell")
        if self.z_bounds[0] < 0:
            raise ValueError("altitude range must be >= 0")
        return self

    @property
    def shape(self) -> Tuple[int, int, int]:
        bounds = (self.x_bounds, self.y_bounds, self.z_bounds)
        return tuple(
            int(math.floor((hi - lo) / c + 1e-9))
            for (lo, hi), c in zip(bounds, self.cell_size)
        )


class RlHyper(StrictModel):
    """Tabular Q-learning hyper-parameters."""

    alpha_q: float = Field(default=0.1, gt=0, le=1, description="Learning rate")
    alpha_schedule: AlphaSchedule = AlphaSchedule.CONSTANT
    gamma: float = Field(default=0.9, ge=0, lt=1, description="Discount")
    epsilon_start: float = Field(default=1.0, ge=0, le=1)
    epsilon_end: float = Field(default=0.05, ge=0, le=1)
    epsilon_decay: float = Field(default=0.98, gt=0, le=1, description="Per episode")
    episodes: int = Field(default=300, ge=0)
    steps: int = Field(default=30, ge=1, description="Steps per episode")
    random_starts: bool = Field(
        default=False, description="Start episodes from uniformly random cells"
    )

    def epsilon(self, episode: int) -> float:
        return max(self.epsilon_end, self.epsilon_start * self.epsilon_decay**episode)


class RandomWalkParams(StrictModel):
    """Per-slot user mobility."""

    step: float = Field(default=5.0, ge=0, description="Step length (m/slot)")
    move_probability: float = Field(default=1.0, ge=0, le=1)
    boundary: Literal["reflect"] = "reflect"

    @property
    def is_static(self) -> bool:
        return self.step == 0 or self.move_probability == 0
