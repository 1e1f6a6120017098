"""Run orchestration, result files and run comparison."""

import json
import math
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from py_uavnoma.config import Scenario, output_root, scenario_hash
from py_uavnoma.enums import ScenarioMode
from py_uavnoma.errors import ConfigError, ContractError
from py_uavnoma.learning import (
    PolicyTrace,
    evaluate_policy,
    static_baseline,
    train_movement,
    train_placement,
)
from py_uavnoma.parallel import WorkerPool, default_workers, derive_seed
from py_uavnoma.spatial import estimate, policy_label, results_frame, simulate
from py_uavnoma.trajectory import (
    TrajectorySolution,
    check_constraints,
    duration_sweep,
    oma_baseline,
    optimize_joint,
)

METRIC_COLUMNS = [
    "scenario_hash",
    "policy",
    "user_class",
    "metric",
    "estimate",
    "ci_halfwidth",
    "trials",
    "seed",
]

# seed offset of the held-out evaluation traces
EVAL_STREAM = 1_000_000


def tool_version() -> str:
    try:
        return version("py-uavnoma")
    except PackageNotFoundError:
        return "0.0.0+local"


class RunManifest(BaseModel):
    """What a run produced and how to reproduce it."""

    scenario_hash: str
    tool_version: str
    mode: ScenarioMode
    seed: int
    workers: int
    wall_time: float = Field(..., description="Seconds, excluded from determinism")
    created_at: str
    outputs: List[str] = Field(default_factory=list)


class Comparison(BaseModel):
    """Paired rows of two runs for one metric."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: pd.DataFrame
    metric: str
    hash_mismatch: bool


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


class RunWriter:
    """Writes the files of one run into ``out_dir``.

    Every table gets ``scenario_hash`` and ``seed`` columns in front.
    """

    def __init__(self, out_dir: Path, scenario_hash: str, seed: int):
        self.out_dir = Path(out_dir)
        self.scenario_hash = scenario_hash
        self.seed = seed
        self.outputs: List[str] = []
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, frame: pd.DataFrame) -> Path:
        frame = frame.copy()
        for col in ("scenario_hash", "seed"):
            if col in frame.columns:
                frame = frame.drop(columns=col)
        frame.insert(0, "seed", self.seed)
        frame.insert(0, "scenario_hash", self.scenario_hash)
        return self._write_csv(name, frame)

    def metrics(self, frame: pd.DataFrame) -> Path:
        return self._write_csv("metrics.csv", frame[METRIC_COLUMNS])

    def json(self, name: str, data: Dict[str, Any]) -> Path:
        path = self.out_dir / name
        text = json.dumps(_json_safe(data), indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        self.outputs.append(name)
        return path

    def _write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
        self.outputs.append(name)
        logger.debug(f"wrote {path} ({len(frame)} rows)")
        return path

    def metric_rows(self, rows: List[Dict[str, Any]]) -> pd.DataFrame:
        for row in rows:
            row.setdefault("scenario_hash", self.scenario_hash)
            row.setdefault("seed", self.seed)
            row.setdefault("ci_halfwidth", 0.0)
            row.setdefault("trials", 1)
        return pd.DataFrame(rows, columns=METRIC_COLUMNS)


# ------------------------------
# Modes
# ------------------------------
def _run_stochastic(scenario: Scenario, writer: RunWriter, workers: int) -> None:
    block = scenario.block
    result = simulate(block, scenario.mc, scenario.trials, scenario.seed, workers)
    policy = policy_label(block, scenario.mc)
    writer.metrics(results_frame(result, writer.scenario_hash, policy))
    writer.json(
        "summary.json",
        {
            "mode": scenario.mode.value,
            "policy": policy,
            "trials": result.trials,
            "seed": result.seed,
            "csi_cost": result.csi_cost,
            "outage": {k: v.model_dump() for k, v in result.outage.items()},
            "ergodic_rate": {k: v.model_dump() for k, v in result.ergodic.items()},
        },
    )


def _solution_rows(solution: TrajectorySolution) -> List[Dict[str, Any]]:
    policy = solution.scheme.value
    rows = [
        {
            "policy": policy,
            "user_class": f"user_{k + 1}",
            "metric": "avg_rate",
            "estimate": r,
        }
        for k, r in enumerate(solution.avg_rates)
    ]
    rows.append(
        {
            "policy": policy,
            "user_class": "all",
            "metric": "min_avg_rate",
            "estimate": solution.min_avg_rate,
        }
    )
    return rows


def _run_trajectory(scenario: Scenario, writer: RunWriter, workers: int) -> None:
    config = scenario.trajectory
    solutions = [optimize_joint(config), oma_baseline(config)]
    rows: List[Dict[str, Any]] = []
    summary: Dict[str, Any] = {"mode": scenario.mode.value, "n_slots": config.n_slots}
    for solution in solutions:
        problems = check_constraints(solution, config)
        if problems:
            logger.warning(f"{solution.scheme.value} solution: {'; '.join(problems)}")
        writer.table(f"waypoints_{solution.scheme.value}.csv", solution.to_frame())
        rows.extend(_solution_rows(solution))
        info = solution.summary()
        info.pop("wall_time")
        info["constraint_violations"] = problems
        summary[solution.scheme.value] = info

    if scenario.sweep is not None:
        seeds = [derive_seed(scenario.seed, i) for i in range(scenario.sweep.instances)]
        sweep = duration_sweep(config, scenario.sweep.durations, seeds, workers)
        sweep = sweep.rename(columns={"seed": "instance_seed"})
        sweep["gap"] = sweep["noma_min_rate"] - sweep["oma_min_rate"]
        writer.table("sweep.csv", sweep)
        means = sweep.groupby("T")[["noma_min_rate", "oma_min_rate", "gap"]].mean()
        summary["sweep"] = {
            "mean_gap_by_T": {str(t): g for t, g in means["gap"].items()},
            "noma_not_worse": float(
                np.mean(sweep["noma_min_rate"] >= sweep["oma_min_rate"] - 1e-6)
            ),
        }
    writer.metrics(writer.metric_rows(rows))
    writer.json("summary.json", summary)


def _trace_frame(traces: List[PolicyTrace]) -> pd.DataFrame:
    frames = []
    for i, trace in enumerate(traces):
        frame = trace.to_frame()
        frame.insert(0, "trace", i)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _trace_rows(policy: str, traces: List[PolicyTrace]) -> List[Dict[str, Any]]:
    means = estimate(np.array([t.mean_reward for t in traces]))
    rows = [
        {
            "policy": policy,
            "user_class": "all",
            "metric": "mean_reward",
            "estimate": means.mean,
            "ci_halfwidth": means.ci_halfwidth,
            "trials": len(traces),
        }
    ]
    per_user = np.mean([t.user_rates for t in traces], axis=0)
    rows.extend(
        {
            "policy": policy,
            "user_class": f"user_{u + 1}",
            "metric": "avg_rate",
            "estimate": float(r),
            "trials": len(traces),
        }
        for u, r in enumerate(per_user)
    )
    return rows


def _run_learning(scenario: Scenario, writer: RunWriter, workers: int) -> None:
    learning = scenario.learning
    seed = scenario.seed
    if scenario.mode == ScenarioMode.MOVEMENT:
        trained = train_movement(learning, seed)
        trace_seeds = [
            derive_seed(seed, EVAL_STREAM + i) for i in range(learning.eval_traces)
        ]
    else:
        trained = train_placement(learning, seed)
        trace_seeds = [seed]

    learned_jobs = [
        (s, (trained.qtable, learning, None, s, seed)) for s in trace_seeds
    ]
    held_jobs = [(s, (learning, None, s, seed)) for s in trace_seeds]
    with WorkerPool(workers=workers) as pool:
        learned = pool.run(evaluate_policy, learned_jobs)
        held = pool.run(static_baseline, held_jobs)

    trained.qtable.save(writer.out_dir / "qtable.json")
    writer.outputs.append("qtable.json")
    writer.table("trace.csv", _trace_frame(learned))
    writer.table("baseline.csv", _trace_frame(held))
    writer.table(
        "training.csv",
        pd.DataFrame(
            {
                "episode": np.arange(len(trained.episode_rewards)),
                "mean_reward": trained.episode_rewards,
            }
        ),
    )
    rows = _trace_rows("q_learning", learned) + _trace_rows("static", held)
    writer.metrics(writer.metric_rows(rows))
    writer.json(
        "summary.json",
        {
            "mode": scenario.mode.value,
            "training_mode": trained.mode,
            "states": len(trained.qtable),
            "initial_cells": [list(c) for c in trained.initial_cells],
            "final_cells": [list(c) for c in trained.final_cells],
            "cluster_counts": trained.clusters.counts,
            "mean_reward": float(np.mean([t.mean_reward for t in learned])),
            "baseline_mean_reward": float(np.mean([t.mean_reward for t in held])),
        },
    )


_MODE_RUNNERS = {
    ScenarioMode.DISC: _run_stochastic,
    ScenarioMode.PPP: _run_stochastic,
    ScenarioMode.FIXED: _run_stochastic,
    ScenarioMode.TRAJECTORY: _run_trajectory,
    ScenarioMode.PLACEMENT: _run_learning,
    ScenarioMode.MOVEMENT: _run_learning,
}


def default_out_dir(scenario: Scenario, digest: str) -> Path:
    if scenario.output:
        return Path(scenario.output)
    return output_root() / f"{scenario.mode.value}-{digest[:12]}-{scenario.seed}"


def run(
    scenario: Scenario,
    out_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> RunManifest:
    """Run ``scenario`` and write its result files plus ``manifest.json``.

    Result files depend only on the scenario and its seed. Wall time and
    the creation timestamp are kept in the manifest.
    """
    workers = workers or default_workers()
    digest = scenario_hash(scenario)
    out = Path(out_dir) if out_dir is not None else default_out_dir(scenario, digest)
    writer = RunWriter(out, digest, scenario.seed)
    logger.info(
        f"running {scenario.mode.value} scenario {digest[:12]} "
        f"(seed {scenario.seed}, {workers} worker(s)) into {out}"
    )
    started = time.perf_counter()
    _MODE_RUNNERS[scenario.mode](scenario, writer, workers)
    manifest = RunManifest(
        scenario_hash=digest,
        tool_version=tool_version(),
        mode=scenario.mode,
        seed=scenario.seed,
        workers=workers,
        wall_time=time.perf_counter() - started,
        created_at=datetime.now(timezone.utc).isoformat(),
        outputs=sorted(writer.outputs + ["manifest.json"]),
    )
    (out / "manifest.json").write_text(
        manifest.model_dump_json(indent=2) + "\n", encoding="utf-8"
    )
    logger.info(f"run finished in {manifest.wall_time:.2f}s")
    return manifest


# ------------------------------
# Comparison
# ------------------------------
def load_run(run_dir: Union[str, Path]) -> tuple:
    """(manifest, metrics) of a finished run."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    metrics_path = run_dir / "metrics.csv"
    if not manifest_path.is_file() or not metrics_path.is_file():
        raise ConfigError(f"{run_dir} is not a finished run", field="run")
    manifest = RunManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    return manifest, pd.read_csv(metrics_path)


def compare(
    run_a: Union[str, Path],
    run_b: Union[str, Path],
    metric: str,
    policy_a: Optional[str] = None,
    policy_b: Optional[str] = None,
) -> Comparison:
    """Pair the ``metric`` rows of two runs and compute ``a - b``.

    Without policies, rows are paired on (policy, user_class). With them,
    run a is restricted to ``policy_a``, run b to ``policy_b`` and rows are
    paired on user_class; pass the same directory twice to compare two
    policies of one run (e.g. ``noma`` against ``oma``).

    Raises:
        ContractError: ``metric`` (or a policy) is absent from a run
    """
    manifest_a, frame_a = load_run(run_a)
    manifest_b, frame_b = load_run(run_b)
    frame_a = frame_a[frame_a["metric"] == metric]
    frame_b = frame_b[frame_b["metric"] == metric]
    keys = ["policy", "user_class"]
    if policy_a is not None or policy_b is not None:
        frame_a = frame_a[frame_a["policy"] == (policy_a or policy_b)]
        frame_b = frame_b[frame_b["policy"] == (policy_b or policy_a)]
        keys = ["user_class"]
    for name, frame in (("run_a", frame_a), ("run_b", frame_b)):
        if frame.empty:
            raise ContractError(f"metric {metric!r} absent from {name}")

    cols = ["policy", "user_class", "estimate", "ci_halfwidth"]
    table = frame_a[cols].merge(frame_b[cols], on=keys, suffixes=("_a", "_b"))
    table["gain"] = table["estimate_a"] - table["estimate_b"]
    base = table["estimate_b"].abs()
    table["relative_gain"] = table["gain"] / base.where(base > 0)
    table.insert(0, "metric", metric)
    table.insert(0, "seed_b", manifest_b.seed)
    table.insert(0, "scenario_hash_b", manifest_b.scenario_hash)
    table.insert(0, "seed", manifest_a.seed)
    table.insert(0, "scenario_hash", manifest_a.scenario_hash)

    mismatch = manifest_a.scenario_hash != manifest_b.scenario_hash
    if mismatch:
        logger.warning("compared runs have different scenario hashes")
    table["hash_mismatch"] = mismatch
    return Comparison(table=table, metric=metric, hash_mismatch=mismatch)


def write_comparison(comparison: Comparison, out_dir: Union[str, Path]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"compare_{comparison.metric}.csv"
    comparison.table.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path
