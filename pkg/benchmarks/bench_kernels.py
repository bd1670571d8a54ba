"""Throughput comparison of the compiled and interpreted stage kernels.

Runs the learning dynamics for a fixed number of stages on the backend
active in this process, then reruns the measurement in a subprocess with
HETFP_NUMBA=0 to get the interpreted numpy figure.  Both backends execute
the same trajectory, so the comparison is purely about speed.

Usage: python3 benchmarks/bench_kernels.py [--stages N] [--seed S]
"""

import argparse
import json
import os
import subprocess
import sys
from time import perf_counter

from hetfp import RunConfig, generate_random_game, run, solve_fixed_point
from hetfp._kernels import BACKEND
from hetfp.harness import DEFAULT_SCHEDULES


def measure(stages: int, seed: int) -> dict:
    game = generate_random_game(
        3, (4, 4), 0.8, payoff_range=(-1.0, 1.0), min_transition_prob=0.05, seed=seed
    )
    equilibrium = solve_fixed_point(game)

    def config(horizon):
        return RunConfig(
            game=game,
            alpha=(DEFAULT_SCHEDULES["alpha1"], DEFAULT_SCHEDULES["alpha2"]),
            beta=(DEFAULT_SCHEDULES["beta1"], DEFAULT_SCHEDULES["beta2"]),
            horizon=horizon,
            seed=seed,
            # diagnostics only at the end, so the loop itself dominates
            checkpoint_every=max(horizon, 1),
        )

    run(config(min(1000, stages)), equilibrium=equilibrium)  # warmup; compiles under numba
    t0 = perf_counter()
    run(config(stages), equilibrium=equilibrium)
    elapsed = perf_counter() - t0
    return {"backend": BACKEND, "stages": stages, "seconds": elapsed}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--stages", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    result = measure(args.stages, args.seed)
    if args.child:
        print(json.dumps(result))
        return 0

    env = dict(os.environ, HETFP_NUMBA="0")
    proc = subprocess.run(
        [sys.executable, __file__, "--child", "--stages", str(args.stages), "--seed", str(args.seed)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    other = json.loads(proc.stdout)

    rows = [result, other]
    print(f"{args.stages} stages, 3 states, 4x4 actions, gamma 0.8")
    for row in rows:
        rate = row["stages"] / row["seconds"]
        print(f"  {row['backend']:>6}: {row['seconds']:8.2f}s  ({rate:,.0f} stages/s)")
    if rows[0]["backend"] != rows[1]["backend"]:
        speedup = rows[1]["seconds"] / rows[0]["seconds"]
        print(f"  {rows[0]['backend']} is {speedup:.1f}x the {rows[1]['backend']} throughput")
    else:
        print("  both processes ran the same backend; unset HETFP_NUMBA to compare")
    return 0


if __name__ == "__main__":
    sys.exit(main())
