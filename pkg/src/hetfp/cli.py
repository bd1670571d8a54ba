"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 validation or config failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagnostics import InvariantViolation, check_assumptions, lemma4_recursion
from .game import (
    GameFormatError,
    generate_random_game,
    load_game,
    save_game,
    validate_game,
)
from .harness import ConfigError, load_config, run_experiment
from .minimax import SolverError
from .schedules import StepSchedule, TimescaleError
from .shapley import NonconvergenceError, save_equilibrium, solve_fixed_point

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hetfp", description="Learning dynamics in zero-sum stochastic games")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random game and write it as JSON")
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--actions", type=int, nargs=2, required=True, metavar=("A1", "A2"))
    g.add_argument("--gamma", type=float, required=True)
    g.add_argument("--payoff-low", type=float, default=-1.0)
    g.add_argument("--payoff-high", type=float, default=1.0)
    g.add_argument("--min-prob", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)

    v = sub.add_parser("validate", help="check a game file and report findings")
    v.add_argument("game", type=Path)

    s = sub.add_parser("solve", help="compute the equilibrium Q-functions of a game")
    s.add_argument("game", type=Path)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10000)
    s.add_argument("--out", type=Path)

    c = sub.add_parser("check", help="evaluate schedule and discount assumptions")
    c.add_argument("--config", type=Path, required=True)
    c.add_argument("--out", type=Path)

    r = sub.add_parser("simulate", help="run the learning dynamics per the config")
    r.add_argument("--config", type=Path, required=True)
    r.add_argument("--seed", type=int, action="append",
                   help="override config seeds; may repeat")
    r.add_argument("--out", type=Path, help="override the output directory")
    r.add_argument("--horizon", type=int)
    r.add_argument("--checkpoint-every", type=int)

    l = sub.add_parser("lemma4", help="iterate the scalar comparison recursion")
    l.add_argument("--y0", type=float, nargs="+", required=True)
    l.add_argument("--gamma", type=float, required=True)
    l.add_argument("--horizon", type=int, required=True)
    l.add_argument("--pattern", choices=("sync", "round_robin"), default="sync")
    l.add_argument("--scale", type=float, default=1.0)
    l.add_argument("--dilation", type=float, default=1.0)
    l.add_argument("--exponent", type=float, default=1.0)
    l.add_argument("--epsilon", type=float, default=0.0)
    l.add_argument("--out", type=Path)
    return p


def _cmd_generate(args) -> int:
    game = generate_random_game(
        args.states,
        tuple(args.actions),
        args.gamma,
        payoff_range=(args.payoff_low, args.payoff_high),
        min_transition_prob=args.min_prob,
        seed=args.seed,
    )
    save_game(game, args.out)
    print(f"wrote {args.out}: {game.n_states} states, actions {game.n_actions}, gamma {game.gamma}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    game = load_game(args.game, validate=False)
    report = validate_game(game)
    for f in report.findings:
        print(f"{f.severity}: {f.location}: {f.message}")
    if report.ok:
        print(f"{args.game}: ok")
        return EXIT_OK
    return EXIT_VALIDATION


def _cmd_solve(args) -> int:
    game = load_game(args.game)
    solution = solve_fixed_point(game, tol=args.tol, max_iter=args.max_iter)
    if args.out is not None:
        save_equilibrium(solution, args.out)
        print(f"wrote {args.out}")
    vals = ", ".join(repr(float(v)) for v in solution.values[0])
    print(f"values: [{vals}]")
    print(f"residual: {solution.residual!r} after {solution.iterations} iterations")
    return EXIT_OK


def _cmd_check(args) -> int:
    config = load_config(args.config)
    game, _ = config.build_game()
    report = check_assumptions(config.run_config(game, config.seeds[0]))
    text = json.dumps(report.to_dict(), indent=1, sort_keys=True)
    if args.out is not None:
        args.out.write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    if not report.theorem_ok:
        print("warning: discount exceeds the product of timescale ratios", file=sys.stderr)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.horizon is not None or args.checkpoint_every is not None:
        from dataclasses import replace

        config = replace(
            config,
            horizon=args.horizon if args.horizon is not None else config.horizon,
            checkpoint_every=(
                args.checkpoint_every
                if args.checkpoint_every is not None
                else config.checkpoint_every
            ),
        )
    result = run_experiment(config, out_dir=args.out, seeds=args.seed, log=print)
    print(f"wrote {result.summary_path}")
    return EXIT_OK


def _cmd_lemma4(args) -> int:
    sched = StepSchedule(args.scale, args.dilation, args.exponent)
    result = lemma4_recursion(
        args.y0,
        args.gamma,
        sched,
        args.horizon,
        epsilon=args.epsilon,
        pattern=args.pattern,
    )
    if args.out is not None:
        n = result.trajectory.shape[1]
        with open(args.out, "w", newline="") as fh:
            fh.write("k," + ",".join(f"y{i}" for i in range(n)) + "\n")
            for k, row in enumerate(result.trajectory):
                fh.write(str(k) + "," + ",".join(repr(float(x)) for x in row) + "\n")
        print(f"wrote {args.out}")
    print(f"tail_min: {result.tail_min!r} (from stage {result.tail_start})")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "check": _cmd_check,
    "simulate": _cmd_simulate,
    "lemma4": _cmd_lemma4,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, GameFormatError, TimescaleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, NonconvergenceError, InvariantViolation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
