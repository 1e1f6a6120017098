"""Enumerations shared by the channel, NOMA, experiment and config layers."""

from enum import Enum, IntEnum


class ChannelMode(str, Enum):
    """Propagation model used for air-to-ground links."""

    LOS_ONLY = "los_only"  # LOS-dominated, open areas
    PROBABILISTIC_LOS = "probabilistic_los"  # urban, elevation dependent


class LinkType(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"


class SicMode(str, Enum):
    """How successive interference cancellation failures are accounted."""

    # every receiver is assumed to cancel earlier-decoded messages perfectly
    IDEALIZED = "idealized"
    # every decoding stage at a receiver must meet that stage's threshold
    STRICT = "strict"


class PairingStrategy(str, Enum):
    """Center/edge pairing in the single-UAV disc model."""

    RANDOM = "random"
    NEAR_NEAR = "near_near"
    NEAR_FAR = "near_far"


class AssociationPolicy(str, Enum):
    """User-to-UAV association in the multi-UAV PPP model."""

    K_NEAREST = "k_nearest"
    MEAN_POWER = "mean_power"
    MAX_SINR = "max_sinr"


class PowerAllocation(str, Enum):
    MAX_MIN = "max_min"
    FIXED = "fixed"


class OmaScheme(str, Enum):
    """Time split used by the orthogonal baseline inside a group."""

    EQUAL_SLOTS = "equal_slots"
    MAX_MIN = "max_min"


class MultipleAccess(str, Enum):
    NOMA = "noma"
    OMA = "oma"


class Objective(str, Enum):
    """Reward aggregated over users by the learning module."""

    MIN_RATE = "min_rate"
    SUM_RATE = "sum_rate"


class AlphaSchedule(str, Enum):
    CONSTANT = "constant"
    INVERSE_VISITS = "inverse_visits"


class ScenarioMode(str, Enum):
    DISC = "disc"
    PPP = "ppp"
    FIXED = "fixed"
    TRAJECTORY = "trajectory"
    PLACEMENT = "placement"
    MOVEMENT = "movement"


class Action(IntEnum):
    """Unit grid moves of a UAV. The index is the Q-table column."""

    PLUS_X = 0
    MINUS_X = 1
    PLUS_Y = 2
    MINUS_Y = 3
    PLUS_Z = 4
    MINUS_Z = 5
    STAY = 6

    @property
    def delta(self) -> tuple:
        return _ACTION_DELTAS[self]


_ACTION_DELTAS = {
    Action.PLUS_X: (1, 0, 0),
    Action.MINUS_X: (-1, 0, 0),
    Action.PLUS_Y: (0, 1, 0),
    Action.MINUS_Y: (0, -1, 0),
    Action.PLUS_Z: (0, 0, 1),
    Action.MINUS_Z: (0, 0, -1),
    Action.STAY: (0, 0, 0),
}
