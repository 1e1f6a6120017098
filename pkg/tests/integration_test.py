"""End-to-end checks of py-uavnoma against known behaviour.

These runs take minutes rather than seconds, so they live outside the
pytest suite. Results are written under ``<project root>/runs/integration``.

Run:
    python tests/integration_test.py
"""

import math
import sys

import numpy as np
import rootutils

ROOT = rootutils.setup_root(__file__, indicator="pyproject.toml", pythonpath=True)

from py_uavnoma import run  # noqa: E402
from py_uavnoma.config import load_scenario  # noqa: E402
from py_uavnoma.learning import (  # noqa: E402
    LearningScenario,
    evaluate_policy,
    static_baseline,
    train_movement,
)
from py_uavnoma.models import (  # noqa: E402
    ChannelParams,
    DiscScenario,
    FixedScenario,
    GridWorld,
    GroundUser,
    McConfig,
    RandomWalkParams,
    RlHyper,
    UavNode,
)
from py_uavnoma.runner import compare  # noqa: E402
from py_uavnoma.spatial import paired_difference, simulate  # noqa: E402

OUT = ROOT / "runs" / "integration"


def test_rayleigh_oracle():
    """Single Rayleigh link with mean SNR 1: outage = 1 - e^-1."""
    print("Testing Rayleigh outage oracle...")
    scenario = FixedScenario(
        uav=UavNode(position=(0, 0, 100)),
        users=[GroundUser(position=(0, 0), threshold=1.0)],
        channel=ChannelParams(beta0=1e-3, noise_power=1e-7),
    )
    result = simulate(scenario, McConfig(), trials=1_000_000, seed=2024, workers=4)
    est = result.outage["user_0"]
    expected = 1 - math.exp(-1)
    print(f"  outage {est.mean:.4f} +- {est.ci_halfwidth:.4f} (expected {expected:.4f})")
    ok = abs(est.mean - expected) < 2e-3
    print("✓ oracle matched" if ok else "✗ oracle missed")
    return ok


def test_noma_over_oma():
    """Max-min NOMA never loses to max-min TDMA on the same pair."""
    print("\nTesting NOMA against OMA on disc pairs...")
    config = McConfig(oma="max_min")
    result = simulate(DiscScenario(M=4), config, trials=50_000, seed=7, workers=4)
    gain = result.ergodic_samples["noma_gain"]
    print(f"  mean sum-rate gain {gain.mean():.4f} bit/s/Hz, worst trial {gain.min():.2e}")
    ok = bool(gain.min() >= -1e-9 and gain.mean() > 0)
    print("✓ NOMA dominates" if ok else "✗ NOMA lost some trials")
    return ok


def check_ordering(label, diff):
    """Print a paired difference and whether its CI lies above zero."""
    low = diff.mean - diff.ci_halfwidth
    held = low > 0
    print(f"  {label}: {diff.mean:+.4f} +- {diff.ci_halfwidth:.4f} bit/s/Hz")
    print(f"    {'holds' if held else 'does not hold'} with default disc parameters")
    return held


def test_pairing_orderings():
    """Near-near beats random on sum rate; near-far has the larger NOMA gain."""
    print("\nTesting pairing strategies...")
    results = {
        pairing: simulate(
            DiscScenario(), McConfig(pairing=pairing), trials=100_000, seed=11, workers=4
        )
        for pairing in ("near_near", "near_far", "random")
    }
    sum_rate = paired_difference(results["near_near"], results["random"], "ergodic", "sum")
    gain = paired_difference(
        results["near_far"], results["near_near"], "ergodic", "noma_gain"
    )
    ok = check_ordering("sum rate near_near - random", sum_rate)
    ok &= check_ordering("NOMA gain near_far - near_near", gain)
    print("✓ orderings hold" if ok else "✗ ordering not reproduced")
    return ok


def test_movement_vs_static():
    """Learned movement earns at least the reward of UAVs parked at the K-means cells."""
    print("\nTesting movement learning against the static baseline...")
    rng = np.random.default_rng(3)
    users = [GroundUser(position=tuple(p)) for p in rng.uniform(-400, 400, size=(8, 2))]
    scenario = LearningScenario(
        grid=GridWorld(n_uav=2),
        users=users,
        walk=RandomWalkParams(step=10.0),
        hyper=RlHyper(episodes=300, steps=30),
        horizon=30,
    )
    trained = train_movement(scenario, seed=5)
    learned = [
        evaluate_policy(trained.qtable, scenario, seed=s, cluster_seed=5).mean_reward
        for s in range(100, 110)
    ]
    parked = [static_baseline(scenario, seed=s, cluster_seed=5).mean_reward for s in range(100, 110)]
    diff = np.subtract(learned, parked)
    print(f"  learned {np.mean(learned):.4f}, static {np.mean(parked):.4f}")
    print(f"  per-trace difference {diff.mean():+.4f}, {int((diff >= 0).sum())}/{len(diff)} traces ahead")
    ok = bool(np.mean(learned) >= np.mean(parked))
    print("✓ movement holds up" if ok else "✗ movement fell behind")
    return ok


def test_trajectory_run():
    """Full trajectory run plus a NOMA/OMA comparison of its own policies."""
    print("\nTesting a trajectory run...")
    scenario = load_scenario(
        {
            "mode": "trajectory",
            "seed": 1,
            "trajectory": {
                "users": [
                    {"position": [-200, 300]},
                    {"position": [250, 100]},
                    {"position": [-100, -350]},
                ],
                "T": 20.0,
                "max_outer": 40,
            },
            "sweep": {"durations": [12.0, 20.0, 30.0], "instances": 2},
        }
    )
    out = OUT / "trajectory"
    try:
        run(scenario, out_dir=out, workers=2)
        comparison = compare(out, out, "min_avg_rate", "noma", "oma")
    except Exception as e:
        print(f"✗ trajectory run failed: {e}")
        return False
    gain = float(comparison.table["gain"].iloc[0])
    print(f"  NOMA - OMA min average rate: {gain:.4f} bit/s/Hz")
    ok = gain >= -1e-6
    print("✓ NOMA not worse" if ok else "✗ OMA ahead")
    return ok


def main():
    """Run integration tests."""
    print("=" * 60)
    print("py-uavnoma Integration Tests")
    print("=" * 60)
    print()

    results = [
        ("Rayleigh oracle", test_rayleigh_oracle()),
        ("NOMA vs OMA", test_noma_over_oma()),
        ("Pairing orderings", test_pairing_orderings()),
        ("Movement vs static", test_movement_vs_static()),
        ("Trajectory run", test_trajectory_run()),
    ]

    print()
    print("=" * 60)
    print("Summary:")
    for name, result in results:
        print(f"  {'✓' if result else '✗'} {name}")
    passed = sum(1 for _, result in results if result)
    total = len(results)
    print(f"Passed: {passed}/{total}")
    print("=" * 60)

    return 0 if passed == total else 1


if __name__ == "__main__":
    sys.exit(main())
