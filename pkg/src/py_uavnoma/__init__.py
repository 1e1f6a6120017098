"""Simulation laboratory for NOMA-aided UAV networks."""

from py_uavnoma.cli import main
from py_uavnoma.clustering import kmeans
from py_uavnoma.config import Scenario, parse_scenario, scenario_hash
from py_uavnoma.errors import (
    ConfigError,
    ContractError,
    DomainError,
    ProjectionError,
    UavNomaError,
)
from py_uavnoma.learning import (
    LearningScenario,
    QTable,
    evaluate_policy,
    train_movement,
    train_placement,
)
from py_uavnoma.models import (
    ChannelParams,
    DiscScenario,
    FixedScenario,
    FlightConfig,
    GridWorld,
    GroundUser,
    McConfig,
    NomaGroup,
    PppScenario,
    UavNode,
)
from py_uavnoma.noma import max_min_power_allocation, noma_rates, oma_rates
from py_uavnoma.runner import RunManifest, compare, run
from py_uavnoma.spatial import mc_ergodic_rate, mc_outage, simulate
from py_uavnoma.trajectory import oma_baseline, optimize_joint

__all__ = [
    "ChannelParams",
    "ConfigError",
    "ContractError",
    "DiscScenario",
    "DomainError",
    "FixedScenario",
    "FlightConfig",
    "GridWorld",
    "GroundUser",
    "LearningScenario",
    "McConfig",
    "NomaGroup",
    "PppScenario",
    "ProjectionError",
    "QTable",
    "RunManifest",
    "Scenario",
    "UavNode",
    "UavNomaError",
    "compare",
    "evaluate_policy",
    "kmeans",
    "main",
    "max_min_power_allocation",
    "mc_ergodic_rate",
    "mc_outage",
    "noma_rates",
    "oma_baseline",
    "oma_rates",
    "optimize_joint",
    "parse_scenario",
    "run",
    "scenario_hash",
    "simulate",
    "train_movement",
    "train_placement",
]
