"""Two-player zero-sum stochastic game model.

The model stores only player 1's stage payoff; player 2's payoff is its
negation, so the zero-sum identity holds by construction and cannot drift.
Game instances are immutable once built and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

GAME_FORMAT_VERSION = 1

# Transition rows must sum to one within this tolerance on load.
KERNEL_TOL = 1e-12


class GameFormatError(ValueError):
    """Raised when a game file cannot be parsed into a valid game."""


class Finding(NamedTuple):
    severity: str  # "error" or "warning"
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of structural validation of a game."""

    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]


@dataclass(frozen=True)
class StochasticGame:
    """Finite discounted two-player zero-sum stochastic game.

    payoff: stage payoffs of player 1, shape (n_states, n_actions1, n_actions2).
    kernel: transition probabilities p(s' | s, a1, a2), shape
        (n_states, n_actions1, n_actions2, n_states).
    gamma: discount factor in [0, 1).
    labels: optional display names for states and actions.
    """

    payoff: np.ndarray
    kernel: np.ndarray
    gamma: float
    labels: dict | None = None

    def __post_init__(self):
        payoff = np.ascontiguousarray(np.asarray(self.payoff, dtype=np.float64))
        kernel = np.ascontiguousarray(np.asarray(self.kernel, dtype=np.float64))
        if payoff.ndim != 3:
            raise ValueError(f"payoff must have shape (s, a1, a2), got {payoff.shape}")
        if payoff.shape[0] < 1 or payoff.shape[1] < 1 or payoff.shape[2] < 1:
            raise ValueError(f"payoff dimensions must be positive, got {payoff.shape}")
        if kernel.shape != payoff.shape + (payoff.shape[0],):
            raise ValueError(
                f"kernel shape {kernel.shape} does not match payoff shape {payoff.shape}"
            )
        g = float(self.gamma)
        if not 0.0 <= g < 1.0:
            raise ValueError(f"discount factor must lie in [0, 1), got {g}")
        payoff.setflags(write=False)
        kernel.setflags(write=False)
        object.__setattr__(self, "payoff", payoff)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "gamma", g)

    @property
    def n_states(self) -> int:
        return self.payoff.shape[0]

    @property
    def n_actions(self) -> tuple[int, int]:
        return self.payoff.shape[1], self.payoff.shape[2]

    def payoff_for(self, player: int) -> np.ndarray:
        """Stage payoff tensor of the given player (1 or 2), own actions on axis 1.

        Player 2's tensor is the negated transpose of player 1's, so each
        player sees a (state, own action, opponent action) layout.
        """
        if player == 1:
            return self.payoff
        if player == 2:
            return -np.swapaxes(self.payoff, 1, 2)
        raise ValueError(f"player must be 1 or 2, got {player}")


def validate_game(game: StochasticGame) -> ValidationReport:
    """Check finiteness and row-stochasticity; warnings for reachability hints."""
    findings: list[Finding] = []
    if not np.isfinite(game.payoff).all():
        bad = np.argwhere(~np.isfinite(game.payoff))[0]
        findings.append(
            Finding("error", f"payoff[{','.join(map(str, bad))}]", "non-finite entry")
        )
    if not np.isfinite(game.kernel).all():
        bad = np.argwhere(~np.isfinite(game.kernel))[0]
        findings.append(
            Finding("error", f"kernel[{','.join(map(str, bad))}]", "non-finite entry")
        )
    else:
        neg = np.argwhere(game.kernel < 0.0)
        for idx in neg[:10]:
            findings.append(
                Finding(
                    "error",
                    f"kernel[{','.join(map(str, idx))}]",
                    f"negative probability {float(game.kernel[tuple(idx)])!r}",
                )
            )
        sums = game.kernel.sum(axis=3)
        off = np.argwhere(np.abs(sums - 1.0) > KERNEL_TOL)
        for idx in off[:10]:
            findings.append(
                Finding(
                    "error",
                    f"kernel[{','.join(map(str, idx))},:]",
                    f"row sums to {float(sums[tuple(idx)])!r}, expected 1 within {KERNEL_TOL}",
                )
            )
        if (game.kernel == 0.0).any() and not neg.size and not off.size:
            findings.append(
                Finding(
                    "warning",
                    "kernel",
                    "some transition probabilities are exactly zero; "
                    "visitation of every state is not guaranteed",
                )
            )
    return ValidationReport(findings)


def payoff_bound(game: StochasticGame) -> tuple[float, float]:
    """Return (max |stage payoff|, discounted bound max|r| / (1 - gamma))."""
    r_max = float(np.abs(game.payoff).max())
    return r_max, r_max / (1.0 - game.gamma)


def generate_random_game(
    n_states: int,
    n_actions: tuple[int, int],
    gamma: float,
    payoff_range: tuple[float, float] = (-1.0, 1.0),
    min_transition_prob: float = 0.0,
    seed: int = 0,
) -> StochasticGame:
    """Draw a random game with uniform payoffs and Dirichlet transition rows.

    Each transition row is min_transition_prob plus a Dirichlet(1,...,1) draw
    scaled by the remaining mass, so every probability is at least the floor
    and the row sums to one exactly up to rounding.
    """
    m1, m2 = int(n_actions[0]), int(n_actions[1])
    if n_states < 1 or m1 < 1 or m2 < 1:
        raise ValueError(f"sizes must be positive, got {n_states} states, actions {n_actions}")
    lo, hi = float(payoff_range[0]), float(payoff_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
        raise ValueError(f"payoff range must be a bounded interval, got ({lo}, {hi})")
    floor = float(min_transition_prob)
    if floor < 0.0:
        raise ValueError(f"min_transition_prob must be nonnegative, got {floor}")
    if floor * n_states > 1.0:
        raise ValueError(
            f"min_transition_prob {floor} infeasible for {n_states} states "
            f"(needs {floor} * {n_states} <= 1)"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    payoff = rng.uniform(lo, hi, size=(n_states, m1, m2))
    raw = rng.dirichlet(np.ones(n_states), size=(n_states, m1, m2))
    kernel = floor + (1.0 - floor * n_states) * raw
    kernel /= kernel.sum(axis=3, keepdims=True)
    return StochasticGame(payoff=payoff, kernel=kernel, gamma=gamma)


def _as_game_dict(game: StochasticGame) -> dict:
    d = {
        "version": GAME_FORMAT_VERSION,
        "n_states": game.n_states,
        "n_actions": list(game.n_actions),
        "gamma": game.gamma,
        "payoff": game.payoff.tolist(),
        "kernel": game.kernel.tolist(),
    }
    if game.labels is not None:
        d["labels"] = game.labels
    return d


def save_game(game: StochasticGame, path) -> None:
    """Write the game as JSON with full float precision."""
    with open(path, "w") as fh:
        json.dump(_as_game_dict(game), fh, indent=1)
        fh.write("\n")


def load_game(path, renormalize: bool = False, validate: bool = True) -> StochasticGame:
    """Load and validate a game file.

    Rows that fail the stochasticity tolerance are an error unless
    renormalize is set, in which case they are rescaled to sum to one.
    With validate off the structural checks are skipped after parsing,
    which lets a caller inspect a broken game and report every finding.
    """
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise GameFormatError(f"{path}: expected a JSON object at top level")
    for key in ("version", "n_states", "n_actions", "gamma", "payoff", "kernel"):
        if key not in raw:
            raise GameFormatError(f"{path}: missing required field {key!r}")
    if raw["version"] != GAME_FORMAT_VERSION:
        raise GameFormatError(
            f"{path}: unsupported format version {raw['version']!r}, "
            f"expected {GAME_FORMAT_VERSION}"
        )
    try:
        game = StochasticGame(
            payoff=np.asarray(raw["payoff"], dtype=np.float64),
            kernel=np.asarray(raw["kernel"], dtype=np.float64),
            gamma=float(raw["gamma"]),
            labels=raw.get("labels"),
        )
    except (ValueError, TypeError) as exc:
        raise GameFormatError(f"{path}: {exc}") from exc
    if game.n_states != raw["n_states"] or list(game.n_actions) != list(raw["n_actions"]):
        raise GameFormatError(
            f"{path}: declared sizes {raw['n_states']}, {raw['n_actions']} do not "
            f"match array shapes {game.n_states}, {list(game.n_actions)}"
        )
    if not validate:
        return game
    report = validate_game(game)
    if not report.ok:
        if renormalize:
            kernel = np.maximum(game.kernel, 0.0)
            sums = kernel.sum(axis=3, keepdims=True)
            if (sums <= 0.0).any() or not np.isfinite(kernel).all():
                raise GameFormatError(f"{path}: kernel cannot be renormalized")
            game = StochasticGame(
                payoff=game.payoff,
                kernel=kernel / sums,
                gamma=game.gamma,
                labels=game.labels,
            )
            report = validate_game(game)
        if not report.ok:
            first = report.errors()[0]
            raise GameFormatError(f"{path}: {first.location}: {first.message}")
    return game
