"""Scenario files: YAML loading, validation and hashing."""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from loguru import logger
from pydantic import Field, ValidationError, field_validator, model_validator

from py_uavnoma.enums import ScenarioMode
from py_uavnoma.errors import ConfigError, config_error_from
from py_uavnoma.learning import LearningScenario
from py_uavnoma.models import (
    ChannelParams,
    DiscScenario,
    FixedScenario,
    FlightConfig,
    McConfig,
    PppScenario,
    StrictModel,
)

SEED_LIMIT = 2**64
DEFAULT_OUTPUT_DIR = "runs"

# Scenario block holding the parameters of each mode
MODE_BLOCKS: Dict[ScenarioMode, str] = {
    ScenarioMode.DISC: "disc",
    ScenarioMode.PPP: "ppp",
    ScenarioMode.FIXED: "fixed",
    ScenarioMode.TRAJECTORY: "trajectory",
    ScenarioMode.PLACEMENT: "learning",
    ScenarioMode.MOVEMENT: "learning",
}

STOCHASTIC_MODES = (ScenarioMode.DISC, ScenarioMode.PPP, ScenarioMode.FIXED)


def output_root() -> Path:
    """Default output root from ``UAVNOMA_OUTPUT_DIR``."""
    return Path(os.getenv("UAVNOMA_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))


class SweepConfig(StrictModel):
    """Duration sweep run next to the single trajectory instance."""

    durations: List[float] = Field(..., min_length=1, description="Flight times (s)")
    instances: int = Field(
        default=1, ge=1, description="User draws per duration, seeded from the run"
    )

    @field_validator("durations")
    @classmethod
    def check_durations(cls, v: List[float]) -> List[float]:
        if any(t <= 0 for t in v):
            raise ValueError("durations must be > 0")
        return v


class Scenario(StrictModel):
    """One run of the laboratory.

    Exactly the block named by ``mode`` is present; a top-level ``channel``
    is copied into that block unless the block brings its own.
    """

    mode: ScenarioMode
    seed: int = Field(..., ge=0, lt=SEED_LIMIT, description="Root seed (u64)")
    channel: Optional[ChannelParams] = None
    disc: Optional[DiscScenario] = None
    ppp: Optional[PppScenario] = None
    fixed: Optional[FixedScenario] = None
    trajectory: Optional[FlightConfig] = None
    sweep: Optional[SweepConfig] = None
    learning: Optional[LearningScenario] = None
    trials: int = Field(default=10_000, description="Monte Carlo trials")
    episodes: Optional[int] = Field(
        default=None, ge=0, description="Overrides learning.hyper.episodes"
    )
    mc: McConfig = Field(default_factory=McConfig)
    output: Optional[str] = Field(default=None, description="Output directory")

    @model_validator(mode="before")
    @classmethod
    def inject_channel(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("channel") is None:
            return data
        block = MODE_BLOCKS.get(_mode_of(data.get("mode")))
        if block is None or not isinstance(data.get(block), dict):
            return data
        if "channel" in data[block]:
            return data
        channel = data["channel"]
        if isinstance(channel, ChannelParams):
            channel = channel.model_dump()
        channel = dict(channel)
        if block == "trajectory":
            # the optimizer only handles deterministic LOS links
            channel.setdefault("fading", False)
        data = dict(data)
        data[block] = dict(data[block], channel=channel)
        return data

    @field_validator("trials")
    @classmethod
    def check_trials(cls, v: int) -> int:
        if v < 1:
            raise ValueError("trials >= 1")
        return v

    @model_validator(mode="after")
    def check_blocks(self) -> "Scenario":
        wanted = MODE_BLOCKS[self.mode]
        present = [
            name
            for name in sorted(set(MODE_BLOCKS.values()))
            if getattr(self, name) is not None
        ]
        if present != [wanted]:
            raise ValueError(
                f"mode {self.mode.value!r} needs exactly the '{wanted}' block, "
                f"found {present or 'none'}"
            )
        if self.sweep is not None and self.mode != ScenarioMode.TRAJECTORY:
            raise ValueError("sweep is only valid in trajectory mode")
        if self.mode == ScenarioMode.MOVEMENT and self.learning.walk is None:
            raise ValueError("movement mode needs learning.walk")
        if self.episodes is not None and self.learning is not None:
            hyper = self.learning.hyper.model_copy(update={"episodes": self.episodes})
            self.learning = self.learning.model_copy(update={"hyper": hyper})
        return self

    @property
    def block(self):
        """The parameter block of ``mode``."""
        return getattr(self, MODE_BLOCKS[self.mode])


def _mode_of(value: Any) -> Optional[ScenarioMode]:
    try:
        return ScenarioMode(value)
    except ValueError:
        return None


def load_scenario(data: Dict[str, Any], **overrides) -> Scenario:
    """Validate a mapping, applying CLI overrides that are not ``None``.

    Raises:
        ConfigError: the data does not describe a valid scenario
    """
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping", constraint="top-level mapping")
    data = dict(data)
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise config_error_from(e) from e


def parse_scenario(path: Union[str, Path], **overrides) -> Scenario:
    """Load and validate a YAML scenario file.

    Args:
        path: Scenario file
        **overrides: Top-level fields replacing the file's values
            (``seed``, ``trials``, ``episodes``)

    Raises:
        ConfigError: missing file, malformed YAML or invalid content
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}", field="config")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}", field="config") from e
    scenario = load_scenario(data, **overrides)
    logger.info(f"loaded {scenario.mode.value} scenario from {path}")
    return scenario


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical JSON of the scenario.

    ``seed`` and ``output`` are left out so runs of the same scenario under
    different seeds share a hash.
    """
    data = scenario.model_dump(mode="json", exclude={"seed", "output"})
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def is_stochastic(scenario: Scenario) -> bool:
    return scenario.mode in STOCHASTIC_MODES

