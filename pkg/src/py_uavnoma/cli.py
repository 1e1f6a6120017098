"""Command-line entry point: ``py-uavnoma <subcommand> ...``."""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from py_uavnoma.config import STOCHASTIC_MODES, Scenario, parse_scenario
from py_uavnoma.enums import ScenarioMode
from py_uavnoma.errors import ConfigError, UavNomaError
from py_uavnoma.runner import compare, run, write_comparison

# Modes each run subcommand accepts
SUBCOMMAND_MODES = {
    "stochastic": STOCHASTIC_MODES,
    "trajectory": (ScenarioMode.TRAJECTORY,),
    "placement": (ScenarioMode.PLACEMENT,),
    "movement": (ScenarioMode.MOVEMENT,),
}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def configure_logging(level: Optional[str] = None) -> None:
    """Replace loguru's default sink with one stderr sink."""
    level = (level or os.getenv("UAVNOMA_LOG_LEVEL", "INFO")).upper()
    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
    )


def _add_run_parser(subparsers, name: str, help_text: str, episodes: bool) -> None:
    parser = subparsers.add_parser(name, help=help_text)
    parser.add_argument("--config", required=True, type=Path, help="Scenario YAML file")
    parser.add_argument("--seed", type=int, help="Root seed, overrides the file")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--workers", type=int, help="Worker count")
    if episodes:
        parser.add_argument("--episodes", type=int, help="Training episodes override")
    else:
        parser.add_argument("--trials", type=int, help="Monte Carlo trials override")
    parser.add_argument("--log-level", help="Log level (default UAVNOMA_LOG_LEVEL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="py-uavnoma",
        description="Simulation laboratory for NOMA-aided UAV networks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(
        subparsers, "stochastic", "Outage / ergodic rate Monte Carlo", episodes=False
    )
    _add_run_parser(
        subparsers, "trajectory", "Joint trajectory and power optimization", False
    )
    _add_run_parser(subparsers, "placement", "Q-learning UAV placement", True)
    _add_run_parser(subparsers, "movement", "Q-learning UAV movement", True)

    cmp_parser = subparsers.add_parser("compare", help="Pair the metrics of two runs")
    cmp_parser.add_argument("run_a", type=Path)
    cmp_parser.add_argument("run_b", type=Path)
    cmp_parser.add_argument("--metric", required=True, help="Metric column to compare")
    cmp_parser.add_argument("--policy-a", help="Policy rows of run a")
    cmp_parser.add_argument("--policy-b", help="Policy rows of run b")
    cmp_parser.add_argument("--out", type=Path, help="Directory for the comparison CSV")
    cmp_parser.add_argument("--log-level", help="Log level (default UAVNOMA_LOG_LEVEL)")
    return parser


def _load(args: argparse.Namespace) -> Scenario:
    scenario = parse_scenario(
        args.config,
        seed=args.seed,
        trials=getattr(args, "trials", None),
        episodes=getattr(args, "episodes", None),
    )
    if scenario.mode not in SUBCOMMAND_MODES[args.command]:
        allowed = ", ".join(m.value for m in SUBCOMMAND_MODES[args.command])
        raise ConfigError(
            f"'{args.command}' cannot run a {scenario.mode.value!r} scenario",
            field="mode",
            constraint=f"mode in {{{allowed}}}",
        )
    return scenario


def _report_error(error: Exception, out_dir: Optional[Path]) -> None:
    if isinstance(error, ConfigError):
        payload = error.to_dict()
    else:
        payload = {
            "error": type(error).__name__,
            "message": str(error),
            "field": None,
            "constraint": None,
        }
    text = json.dumps(payload)
    print(text)
    if out_dir is not None and out_dir.is_dir():
        (out_dir / "error.json").write_text(text + "\n", encoding="utf-8")


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    out_dir = args.out
    try:
        if args.command == "compare":
            comparison = compare(
                args.run_a, args.run_b, args.metric, args.policy_a, args.policy_b
            )
            path = write_comparison(comparison, out_dir or args.run_a)
            logger.info(f"comparison written to {path}")
            print(comparison.table.to_string(index=False))
            return EXIT_OK
        scenario = _load(args)
        manifest = run(scenario, out_dir=out_dir, workers=args.workers)
        print(manifest.model_dump_json(exclude={"wall_time", "created_at"}))
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"invalid configuration: {e}")
        _report_error(e, out_dir)
        return EXIT_CONFIG
    except UavNomaError as e:
        logger.error(f"{type(e).__name__}: {e}")
        _report_error(e, out_dir)
        return EXIT_ERROR
    except Exception as e:
        logger.exception("unexpected failure")
        _report_error(e, out_dir)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
