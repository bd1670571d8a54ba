"""Config-driven experiment harness.

A TOML config pins everything a run depends on: the game (a file or
generator parameters), the four step schedules, run controls, seeds, and
solver tolerances.  Outputs are written with repr-level float precision,
so a rerun of the same config and seed reproduces every CSV byte for
byte; wall-clock timing lives only in the per-seed metadata files.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from ._kernels import BACKEND
from .diagnostics import CSV_COLUMNS, InvariantViolation, check_assumptions
from .dynamics import RunConfig, resolve_offsets, run
from .game import StochasticGame, generate_random_game, load_game, save_game
from .schedules import StepSchedule
from .shapley import solve_fixed_point, save_equilibrium

DEFAULT_SCHEDULES = {
    "alpha1": StepSchedule(1.0, 1.0, 0.5),
    "alpha2": StepSchedule(1.0, 0.81, 0.5),
    "beta1": StepSchedule(1.0, 1.0, 1.0),
    "beta2": StepSchedule(1.0, 0.95, 1.0),
}

WINDOW_FRACTION = 0.1


class ConfigError(ValueError):
    """Raised when a config cannot be parsed into a valid experiment."""


@dataclass(frozen=True)
class GenerateSpec:
    states: int
    actions: tuple[int, int]
    gamma: float
    payoff_low: float = -1.0
    payoff_high: float = 1.0
    min_transition_prob: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description plus its content hash."""

    game_path: Path | None
    renormalize: bool
    generate: GenerateSpec | None
    schedules: dict
    horizon: int
    checkpoint_every: int
    tie_rule: str
    initial_state: int | str
    lam: float | None
    seeds: tuple[int, ...]
    out_dir: Path
    solver_tol: float
    solver_max_iter: int
    config_hash: str
    normalized: dict = field(repr=False)

    def build_game(self) -> tuple[StochasticGame, dict]:
        if self.game_path is not None:
            return load_game(self.game_path, renormalize=self.renormalize), {
                "source": "file",
                "path": str(self.game_path),
            }
        g = self.generate
        game = generate_random_game(
            g.states,
            g.actions,
            g.gamma,
            payoff_range=(g.payoff_low, g.payoff_high),
            min_transition_prob=g.min_transition_prob,
            seed=g.seed,
        )
        return game, {"source": "generated", "params": _generate_dict(g)}

    def run_config(self, game: StochasticGame, seed: int) -> RunConfig:
        return RunConfig(
            game=game,
            alpha=(self.schedules["alpha1"], self.schedules["alpha2"]),
            beta=(self.schedules["beta1"], self.schedules["beta2"]),
            horizon=self.horizon,
            seed=seed,
            checkpoint_every=self.checkpoint_every,
            tie_rule=self.tie_rule,
            initial_state=self.initial_state,
            lam=self.lam,
        )


def _generate_dict(g: GenerateSpec) -> dict:
    return {
        "states": g.states,
        "actions": list(g.actions),
        "gamma": g.gamma,
        "payoff_low": g.payoff_low,
        "payoff_high": g.payoff_high,
        "min_transition_prob": g.min_transition_prob,
        "seed": g.seed,
    }


_SCHEMA = {
    "game": {"path", "renormalize", "generate"},
    "game.generate": {
        "states",
        "actions",
        "gamma",
        "payoff_low",
        "payoff_high",
        "min_transition_prob",
        "seed",
    },
    "run": {"horizon", "checkpoint_every", "tie_rule", "initial_state", "lam"},
    "schedules": {"alpha1", "alpha2", "beta1", "beta2"},
    "schedules.*": {"scale", "dilation", "exponent"},
    "experiment": {"seeds", "out_dir"},
    "solver": {"tol", "max_iter"},
}


def _line_of(text: str, key: str) -> str:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if key in stripped:
            return f" (line {lineno})"
    return ""


def _reject_unknown(raw: dict, text: str) -> None:
    top = {"game", "run", "schedules", "experiment", "solver"}
    for key in raw:
        if key not in top:
            raise ConfigError(f"unknown config section {key!r}{_line_of(text, key)}")
    for section, allowed in (("game", _SCHEMA["game"]), ("run", _SCHEMA["run"]),
                             ("experiment", _SCHEMA["experiment"]), ("solver", _SCHEMA["solver"])):
        for key in raw.get(section, {}):
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}{_line_of(text, key)}")
    for key in raw.get("game", {}).get("generate", {}):
        if key not in _SCHEMA["game.generate"]:
            raise ConfigError(f"unknown key game.generate.{key}{_line_of(text, key)}")
    for name in raw.get("schedules", {}):
        if name not in _SCHEMA["schedules"]:
            raise ConfigError(f"unknown schedule {name!r}{_line_of(text, name)}")
        for key in raw["schedules"][name]:
            if key not in _SCHEMA["schedules.*"]:
                raise ConfigError(f"unknown key schedules.{name}.{key}{_line_of(text, key)}")


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    """Parse a TOML experiment config; unknown keys are errors."""
    base = Path(base_dir)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    _reject_unknown(raw, text)

    game_sec = raw.get("game", {})
    game_path = None
    generate = None
    if "path" in game_sec and "generate" in game_sec:
        raise ConfigError("game.path and game.generate are mutually exclusive")
    if "path" in game_sec:
        game_path = base / str(game_sec["path"])
        if not game_path.is_file():
            raise ConfigError(f"game file {game_path} does not exist")
    elif "generate" in game_sec:
        g = game_sec["generate"]
        for req in ("states", "actions", "gamma"):
            if req not in g:
                raise ConfigError(f"game.generate.{req} is required")
        actions = g["actions"]
        if not (isinstance(actions, (list, tuple)) and len(actions) == 2):
            raise ConfigError("game.generate.actions must be a pair")
        try:
            generate = GenerateSpec(
                states=int(g["states"]),
                actions=(int(actions[0]), int(actions[1])),
                gamma=float(g["gamma"]),
                payoff_low=float(g.get("payoff_low", -1.0)),
                payoff_high=float(g.get("payoff_high", 1.0)),
                min_transition_prob=float(g.get("min_transition_prob", 0.0)),
                seed=int(g.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"game.generate: {exc}") from exc
    else:
        raise ConfigError("config needs either game.path or game.generate")

    run_sec = raw.get("run", {})
    if "horizon" not in run_sec:
        raise ConfigError("run.horizon is required")

    schedules = dict(DEFAULT_SCHEDULES)
    for name, params in raw.get("schedules", {}).items():
        try:
            schedules[name] = StepSchedule(
                scale=float(params.get("scale", 1.0)),
                dilation=float(params.get("dilation", 1.0)),
                exponent=float(params.get("exponent", 1.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"schedules.{name}: {exc}") from exc

    exp_sec = raw.get("experiment", {})
    seeds = exp_sec.get("seeds", [0])
    if not (isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds)):
        raise ConfigError("experiment.seeds must be a nonempty list of integers")
    solver_sec = raw.get("solver", {})

    try:
        initial_state = run_sec.get("initial_state", 0)
        if not isinstance(initial_state, str):
            initial_state = int(initial_state)
        lam = run_sec.get("lam")
        cfg = ExperimentConfig(
            game_path=game_path,
            renormalize=bool(game_sec.get("renormalize", False)),
            generate=generate,
            schedules=schedules,
            horizon=int(run_sec["horizon"]),
            checkpoint_every=int(run_sec.get("checkpoint_every", 1000)),
            tie_rule=str(run_sec.get("tie_rule", "lowest")),
            initial_state=initial_state,
            lam=None if lam is None else float(lam),
            seeds=tuple(seeds),
            out_dir=base / str(exp_sec.get("out_dir", "results")),
            solver_tol=float(solver_sec.get("tol", 1e-10)),
            solver_max_iter=int(solver_sec.get("max_iter", 10000)),
            config_hash="",
            normalized={},
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    normalized = {
        "game": (
            {"path": str(game_path), "renormalize": cfg.renormalize}
            if game_path is not None
            else {"generate": _generate_dict(generate)}
        ),
        "run": {
            "horizon": cfg.horizon,
            "checkpoint_every": cfg.checkpoint_every,
            "tie_rule": cfg.tie_rule,
            "initial_state": cfg.initial_state,
            "lam": cfg.lam,
        },
        "schedules": {
            name: {"scale": s.scale, "dilation": s.dilation, "exponent": s.exponent}
            for name, s in sorted(schedules.items())
        },
        "experiment": {"seeds": list(cfg.seeds)},
        "solver": {"tol": cfg.solver_tol, "max_iter": cfg.solver_max_iter},
    }
    digest = hashlib.sha256(
        json.dumps(normalized, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    object.__setattr__(cfg, "config_hash", digest)
    object.__setattr__(cfg, "normalized", normalized)

    # Fail early on invalid run parameters instead of at run time.
    if cfg.horizon < 0:
        raise ConfigError("run.horizon must be nonnegative")
    if cfg.checkpoint_every < 1:
        raise ConfigError("run.checkpoint_every must be >= 1")
    if cfg.tie_rule not in ("lowest", "uniform"):
        raise ConfigError(f"run.tie_rule must be 'lowest' or 'uniform', got {cfg.tie_rule!r}")
    if isinstance(cfg.initial_state, str) and cfg.initial_state != "uniform":
        raise ConfigError("run.initial_state must be a state index or 'uniform'")
    if cfg.lam is not None and not cfg.lam > 1.0:
        raise ConfigError("run.lam must exceed 1")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


@dataclass(frozen=True)
class ExperimentResult:
    out_dir: Path
    game_path: Path
    equilibrium_path: Path
    csv_paths: dict
    meta_paths: dict
    summary_path: Path


def _fmt(x: float) -> str:
    return repr(float(x))


def write_records_csv(records, path) -> None:
    """One row per (checkpoint, state) with full-precision floats."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fields = [str(r.k), str(r.s)]
            fields += [_fmt(getattr(r, c)) for c in CSV_COLUMNS[2:]]
            fh.write(",".join(fields) + "\n")


def _window_stats(records, n_states: int, window) -> dict | None:
    if not window:
        return None
    members = set(window)
    rows = [r for r in records if r.k in members]
    by_state = {s: [r for r in rows if r.s == s] for s in range(n_states)}
    return {
        "checkpoints": len(window),
        "mean_abs_vbar": [
            float(np.mean([abs(r.vbar) for r in by_state[s]])) for s in range(n_states)
        ],
        "mean_e1": [float(np.mean([r.e1 for r in by_state[s]])) for s in range(n_states)],
        "mean_e2": [float(np.mean([r.e2 for r in by_state[s]])) for s in range(n_states)],
        "max_abs_qtilde1": float(max(r.qtilde1_max for r in rows)),
        "max_abs_qtilde2": float(max(r.qtilde2_max for r in rows)),
        "max_V": float(max(r.V for r in rows)),
    }


def summarize_records(records, n_states: int) -> dict:
    """Early-window and final-window statistics over the checkpoint grid."""
    ks = sorted({r.k for r in records})
    count = max(1, int(len(ks) * WINDOW_FRACTION)) if ks else 0
    return {
        "n_checkpoints": len(ks),
        "window_fraction": WINDOW_FRACTION,
        "early": _window_stats(records, n_states, ks[:count]),
        "final": _window_stats(records, n_states, ks[-count:] if count else []),
    }


def run_experiment(config: ExperimentConfig, out_dir=None, seeds=None, log=None) -> ExperimentResult:
    """Solve the game exactly, simulate every seed, write all artifacts.

    Writes game.json, equilibrium.json, run_<seed>.csv, meta_<seed>.json,
    and summary.json under the output directory.
    """
    log = log or (lambda msg: None)
    out = Path(out_dir) if out_dir is not None else config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    seeds = tuple(seeds) if seeds is not None else config.seeds

    game, source = config.build_game()
    game_path = out / "game.json"
    save_game(game, game_path)
    log(f"game: {source['source']}, {game.n_states} states, actions {game.n_actions}")

    equilibrium = solve_fixed_point(game, tol=config.solver_tol, max_iter=config.solver_max_iter)
    eq_path = out / "equilibrium.json"
    save_equilibrium(equilibrium, eq_path)
    log(f"fixed point solved: residual {equilibrium.residual:.3e} in {equilibrium.iterations} iterations")

    template = config.run_config(game, seeds[0])
    report = check_assumptions(template)
    d_alpha, d_beta, lam = resolve_offsets(template)

    csv_paths = {}
    meta_paths = {}
    summary_seeds = {}
    for seed in seeds:
        rc = config.run_config(game, seed)
        t0 = time.perf_counter()
        try:
            _, records = run(rc, equilibrium=equilibrium)
        except InvariantViolation as exc:
            dump = out / f"violation_{seed}.json"
            with open(dump, "w") as fh:
                json.dump(
                    {"seed": seed, "message": str(exc), "context": exc.context},
                    fh,
                    indent=1,
                    sort_keys=True,
                )
                fh.write("\n")
            log(f"seed {seed}: invariant violation, context dumped to {dump}")
            raise
        elapsed = time.perf_counter() - t0
        csv_path = out / f"run_{seed}.csv"
        write_records_csv(records, csv_path)
        meta = {
            "config_hash": config.config_hash,
            "tool_version": __version__,
            "backend": BACKEND,
            "prng": {"algorithm": "PCG64", "seed": seed},
            "horizon": config.horizon,
            "checkpoint_every": config.checkpoint_every,
            "tie_rule": config.tie_rule,
            "initial_state": config.initial_state,
            "d_alpha": d_alpha,
            "d_beta": d_beta,
            "lambda": lam,
            "assumptions": report.to_dict(),
            "game": dict(source, n_states=game.n_states, n_actions=list(game.n_actions), gamma=game.gamma),
            "solver": {"tol": config.solver_tol, "max_iter": config.solver_max_iter,
                       "residual": equilibrium.residual, "iterations": equilibrium.iterations},
            "n_records": len(records),
            "wall_clock_seconds": elapsed,
        }
        meta_path = out / f"meta_{seed}.json"
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)
            fh.write("\n")
        csv_paths[seed] = csv_path
        meta_paths[seed] = meta_path
        summary_seeds[str(seed)] = summarize_records(records, game.n_states)
        log(f"seed {seed}: {len(records)} records in {elapsed:.2f}s -> {csv_path.name}")

    summary = {
        "config_hash": config.config_hash,
        "seeds": list(seeds),
        "per_seed": summary_seeds,
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return ExperimentResult(
        out_dir=out,
        game_path=game_path,
        equilibrium_path=eq_path,
        csv_paths=csv_paths,
        meta_paths=meta_paths,
        summary_path=summary_path,
    )
