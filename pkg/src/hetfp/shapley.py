"""Equilibrium Q-functions of discounted zero-sum stochastic games.

Value iteration with the one-stage operator

    (F_i Q)(s, a) = r_i(s, a) + gamma * sum_{s'} p(s' | s, a) val_i(Q(s', .))

where val_i is the matrix-game value from player i's point of view.  The
operator is a gamma-contraction in the max norm, so iteration from zero
converges geometrically to the unique fixed point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .game import StochasticGame
from .minimax import minimax_value
from . import minimax


class NonconvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EquilibriumSolution:
    """Fixed-point Q-functions with induced state values and stationary strategies.

    q_star[i - 1] holds player i's Q tensor in the player's own layout
    (state, own action, opponent action).  residual is the max-norm
    one-step displacement measured at the returned iterate.
    """

    q_star: tuple[np.ndarray, np.ndarray]
    values: tuple[np.ndarray, np.ndarray]
    strategies: tuple[np.ndarray, np.ndarray]
    residual: float
    iterations: int
    gamma: float


def _state_values(q: np.ndarray, tol: float) -> np.ndarray:
    return np.array([minimax_value(q[s], tol=tol).value for s in range(q.shape[0])])


def apply_operator(game: StochasticGame, player: int, q: np.ndarray, tol: float = minimax.DEFAULT_TOL) -> np.ndarray:
    """One application of player i's operator to a Q tensor in own layout."""
    r = game.payoff_for(player)
    q = np.asarray(q, dtype=np.float64)
    if q.shape != r.shape:
        raise ValueError(f"q shape {q.shape} does not match payoff shape {r.shape}")
    vals = _state_values(q, tol)
    kernel = game.kernel if player == 1 else np.swapaxes(game.kernel, 1, 2)
    return r + game.gamma * (kernel @ vals)


def solve_fixed_point(
    game: StochasticGame,
    tol: float = 1e-10,
    max_iter: int = 10000,
    lp_tol: float = minimax.DEFAULT_TOL,
) -> EquilibriumSolution:
    """Iterate each player's operator from zero until the fixed point is pinned.

    The stopping threshold is tol scaled by min(1, (1 - gamma) / gamma), so
    both the distance to the fixed point and the reported residual are
    bounded by tol regardless of the discount factor.  Both players are
    solved independently; agreement of the two solutions up to sign is a
    property of the game, not of this routine, and is checked by callers
    that care.
    """
    gamma = game.gamma
    if gamma == 0.0:
        threshold = tol
    else:
        threshold = tol * min(1.0, (1.0 - gamma) / gamma)
    qs = []
    values = []
    strategies = []
    residuals = []
    iterations = 0
    for player in (1, 2):
        q = np.zeros_like(game.payoff_for(player))
        delta = np.inf
        count = 0
        while True:
            q_next = apply_operator(game, player, q, tol=lp_tol)
            delta = float(np.max(np.abs(q_next - q)))
            q = q_next
            count += 1
            if delta <= threshold:
                break
            if count >= max_iter:
                raise NonconvergenceError(
                    f"value iteration for player {player} did not reach "
                    f"threshold {threshold:.3e} in {max_iter} iterations",
                    residual=delta,
                )
        residuals.append(float(np.max(np.abs(apply_operator(game, player, q, tol=lp_tol) - q))))
        sols = [minimax_value(q[s], tol=lp_tol) for s in range(game.n_states)]
        values.append(np.array([s.value for s in sols]))
        strategies.append(np.array([s.row_strategy for s in sols]))
        qs.append(q)
        iterations = max(iterations, count)
    return EquilibriumSolution(
        q_star=(qs[0], qs[1]),
        values=(values[0], values[1]),
        strategies=(strategies[0], strategies[1]),
        residual=max(residuals),
        iterations=iterations,
        gamma=gamma,
    )


def save_equilibrium(solution: EquilibriumSolution, path) -> None:
    """Write the solution as JSON with full float precision."""
    d = {
        "gamma": solution.gamma,
        "residual": solution.residual,
        "iterations": solution.iterations,
        "q_star": [q.tolist() for q in solution.q_star],
        "values": [v.tolist() for v in solution.values],
        "strategies": [s.tolist() for s in solution.strategies],
    }
    with open(path, "w") as fh:
        json.dump(d, fh, indent=1)
        fh.write("\n")


def load_equilibrium(path) -> EquilibriumSolution:
    with open(path) as fh:
        d = json.load(fh)
    return EquilibriumSolution(
        q_star=tuple(np.asarray(q, dtype=np.float64) for q in d["q_star"]),
        values=tuple(np.asarray(v, dtype=np.float64) for v in d["values"]),
        strategies=tuple(np.asarray(s, dtype=np.float64) for s in d["strategies"]),
        residual=float(d["residual"]),
        iterations=int(d["iterations"]),
        gamma=float(d["gamma"]),
    )
