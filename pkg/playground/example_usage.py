"""Example usage of py-uavnoma.

This example walks through one scenario of each family:
1. Monte Carlo outage and ergodic rate on a disc
2. NOMA against OMA on an optimized flight
3. Q-learning placement against the K-means baseline
4. A full run from a YAML file, with result files on disk
"""

import os

import rootutils
from loguru import logger

ROOT = rootutils.setup_root(__file__, indicator="pyproject.toml", dotenv=True)

from py_uavnoma import (  # noqa: E402
    DiscScenario,
    FlightConfig,
    GridWorld,
    GroundUser,
    LearningScenario,
    McConfig,
    evaluate_policy,
    oma_baseline,
    optimize_joint,
    parse_scenario,
    run,
    simulate,
    train_placement,
)
from py_uavnoma.learning import static_baseline  # noqa: E402


def main():
    """Main example function."""
    # Library modules only emit; the sink is ours to choose.
    logger.remove()
    logger.add(lambda msg: print(msg, end=""), level=os.getenv("UAVNOMA_LOG_LEVEL", "WARNING"))

    # Example 1: pairing strategies on a disc
    print("=== Disc Monte Carlo ===")
    for pairing in ("near_near", "near_far", "random"):
        config = McConfig(pairing=pairing, thresholds={"center": 1.0, "edge": 0.5})
        result = simulate(DiscScenario(M=4), config, trials=20_000, seed=7, workers=2)
        edge = result.outage["edge"]
        total = result.ergodic["sum"]
        print(
            f"  {pairing:<10} edge outage {edge.mean:.3f} +- {edge.ci_halfwidth:.3f}, "
            f"sum rate {total.mean:.2f} bit/s/Hz"
        )
    print()

    # Example 2: one flight, NOMA and OMA
    print("=== Trajectory optimization ===")
    flight = FlightConfig(
        users=[
            GroundUser(position=(-200, 300)),
            GroundUser(position=(250, 100)),
            GroundUser(position=(-100, -350)),
        ],
        T=20.0,
        max_outer=30,
    )
    noma = optimize_joint(flight)
    oma = oma_baseline(flight)
    print(f"  NOMA min average rate {noma.min_avg_rate:.3f} after {noma.iterations} iterations")
    print(f"  OMA  min average rate {oma.min_avg_rate:.3f} after {oma.iterations} iterations")
    print()

    # Example 3: placement learning
    print("=== Q-learning placement ===")
    scenario = LearningScenario(
        grid=GridWorld(n_uav=2),
        users=[
            GroundUser(position=(-300, -250)),
            GroundUser(position=(-220, -310)),
            GroundUser(position=(280, 260)),
            GroundUser(position=(320, 190)),
        ],
    )
    trained = train_placement(scenario, seed=3)
    learned = evaluate_policy(trained.qtable, scenario, seed=3)
    parked = static_baseline(scenario, seed=3)
    print(f"  K-means cells {trained.initial_cells} -> learned {trained.final_cells}")
    print(f"  reward: learned {learned.mean_reward:.3f}, static {parked.mean_reward:.3f}")
    print()

    # Example 4: a run from a scenario file
    print("=== Run from configs/disc.yaml ===")
    scenario = parse_scenario(ROOT / "configs" / "disc.yaml", trials=10_000)
    out = ROOT / "runs" / "playground"
    manifest = run(scenario, out_dir=out, workers=2)
    print(f"  wrote {', '.join(manifest.outputs)} to {out}")

    print("=== Examples completed ===")


if __name__ == "__main__":
    main()
