"""Convergence diagnostics for the learning dynamics.

Per state the tracking error compares the belief-induced value with the
matrix-game value of the current Q slice; the summed quantities pair the
two players' estimates, which for the exact solution would cancel.  The
scalar decrease certificate combines both players' tracking errors with a
weighted norm offset.  All quantities are observational except the
sandwich, bound, and simplex invariants, which abort a run when breached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import minimax
from .game import StochasticGame
from .schedules import StepSchedule, asymptotic_ratio
from .shapley import EquilibriumSolution

if TYPE_CHECKING:
    from .dynamics import BeliefState, RunConfig

# Tolerances of the enforced runtime invariants.
SANDWICH_TOL = 1e-7
BOUND_TOL = 1e-9
SIMPLEX_TOL = 1e-12


class InvariantViolation(RuntimeError):
    """A runtime invariant of the learning state failed; carries context."""

    def __init__(self, message: str, context: dict):
        super().__init__(message)
        self.context = context


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-state checkpoint row; field order matches the CSV schema."""

    k: int
    s: int
    v1: float
    v2: float
    vbar: float
    e1: float
    e2: float
    qbar_max: float
    qbar_min: float
    qtilde1_max: float
    qtilde2_max: float
    gamma_min: float
    gamma_max: float
    V: float


CSV_COLUMNS = (
    "k",
    "s",
    "v1",
    "v2",
    "vbar",
    "e1",
    "e2",
    "qbar_max",
    "qbar_min",
    "qtilde1_max",
    "qtilde2_max",
    "gamma_min",
    "gamma_max",
    "V",
)


@dataclass(frozen=True)
class AssumptionReport:
    """Schedule and discount checks for one configuration."""

    gamma: float
    d_alpha: float
    d_beta: float
    product: float
    theorem_ok: bool
    boundary: bool
    lam_interval: tuple[float, float] | None
    default_lam: float
    schedule_flags: dict
    timescale_separated: bool

    def to_dict(self) -> dict:
        upper = None
        if self.lam_interval is not None:
            upper = self.lam_interval[1]
            upper = None if np.isinf(upper) else upper
        return {
            "gamma": self.gamma,
            "d_alpha": self.d_alpha,
            "d_beta": self.d_beta,
            "product": self.product,
            "theorem_ok": self.theorem_ok,
            "boundary": self.boundary,
            "lambda_interval": None if self.lam_interval is None else [self.lam_interval[0], upper],
            "default_lambda": self.default_lam,
            "schedule_flags": self.schedule_flags,
            "timescale_separated": self.timescale_separated,
        }


def lambda_interval(gamma: float, d_alpha: float, d_beta: float):
    """Open interval of admissible norm-offset weights, or None when empty."""
    product = d_alpha * d_beta
    if gamma == 0.0:
        return (1.0, np.inf)
    upper = product / gamma
    if upper <= 1.0:
        return None
    return (1.0, upper)


def default_lambda(gamma: float, d_alpha: float, d_beta: float) -> float:
    """Midpoint of the admissible interval; 2 when unbounded, 1 when empty."""
    interval = lambda_interval(gamma, d_alpha, d_beta)
    if interval is None:
        return 1.0
    lo, hi = interval
    if np.isinf(hi):
        return 2.0
    return 0.5 * (lo + hi)


def _value_rows(q_slice: np.ndarray, belief_row: np.ndarray) -> np.ndarray:
    n_own, n_opp = q_slice.shape
    out = np.empty(n_own)
    for i in range(n_own):
        acc = 0.0
        for j in range(n_opp):
            acc += q_slice[i, j] * belief_row[j]
        out[i] = acc
    return out


def tracking_error(belief, game: StochasticGame, s: int, player: int, lp_tol: float = minimax.DEFAULT_TOL) -> float:
    """Belief-induced value minus matrix-game value of the Q slice at s.

    Both players maximize their own Q, so the slice enters the matrix
    solver in own layout for either player.
    """
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player}")
    i = player - 1
    v_hat = float(_value_rows(belief.q[i][s], belief.pi[i][s]).max())
    val = minimax.minimax_value(belief.q[i][s], tol=lp_tol).value
    return v_hat - val


def lyapunov(pi_slices, q_slices, d_alpha: float, lam: float, vals=None) -> float:
    """Rectified decrease certificate at one state.

    vals may carry precomputed matrix-game values of the two Q slices to
    avoid re-solving; callers that pass them must have produced them from
    exactly these slices.
    """
    q1, q2 = (np.asarray(q, dtype=np.float64) for q in q_slices)
    p1, p2 = (np.asarray(p, dtype=np.float64) for p in pi_slices)
    if vals is None:
        val1 = minimax.minimax_value(q1).value
        val2 = minimax.minimax_value(q2).value
    else:
        val1, val2 = float(vals[0]), float(vals[1])
    v1 = float(_value_rows(q1, p1).max())
    v2 = float(_value_rows(q2, p2).max())
    e1 = v1 - val1
    e2 = v2 - val2
    qbar = q1 + q2.T
    xi = lam * float(np.abs(qbar).max()) - (val1 + val2)
    return max(0.0, d_alpha * e1 + e2 - xi)


def coupled_iterates(belief, equilibrium: EquilibriumSolution, d_beta: float):
    """Deviations from the fixed point and their weighted coupling.

    Accepts a BeliefState or a bare (q1, q2) pair.  Returns a 4-tuple
    (q_bar, qtilde1, qtilde2, coupled): each deviation stays in its
    player's own layout, while q_bar = qtilde1 + qtilde2 and the coupling
    qtilde1 + d_beta * qtilde2 are expressed in player 1's layout.
    """
    q = getattr(belief, "q", belief)
    q1 = np.asarray(q[0], dtype=np.float64)
    q2 = np.asarray(q[1], dtype=np.float64)
    if q1.shape != equilibrium.q_star[0].shape or q2.shape != equilibrium.q_star[1].shape:
        raise ValueError(
            f"belief tensors {q1.shape}/{q2.shape} do not match the "
            f"equilibrium's {equilibrium.q_star[0].shape}/{equilibrium.q_star[1].shape}"
        )
    qt1 = q1 - equilibrium.q_star[0]
    qt2 = q2 - equilibrium.q_star[1]
    qt2_aligned = np.swapaxes(qt2, 1, 2)
    q_bar = qt1 + qt2_aligned
    coupled = qt1 + d_beta * qt2_aligned
    return q_bar, qt1, qt2, coupled


def check_assumptions(config) -> AssumptionReport:
    """Evaluate the standing assumptions for a run configuration."""
    gamma = config.game.gamma
    d_alpha = asymptotic_ratio(config.alpha[0], config.alpha[1])
    d_beta = asymptotic_ratio(config.beta[0], config.beta[1])
    product = d_alpha * d_beta
    flags = {}
    for name, sched in (
        ("alpha1", config.alpha[0]),
        ("alpha2", config.alpha[1]),
        ("beta1", config.beta[0]),
        ("beta2", config.beta[1]),
    ):
        flags[name] = {
            "vanishing": sched.exponent > 0.0,
            "divergent": sched.exponent <= 1.0,
        }
    separated = all(
        config.beta[i].exponent > config.alpha[i].exponent for i in (0, 1)
    )
    return AssumptionReport(
        gamma=gamma,
        d_alpha=d_alpha,
        d_beta=d_beta,
        product=product,
        theorem_ok=gamma <= product,
        boundary=gamma == product,
        lam_interval=lambda_interval(gamma, d_alpha, d_beta),
        default_lam=default_lambda(gamma, d_alpha, d_beta),
        schedule_flags=flags,
        timescale_separated=separated,
    )


def checkpoint_records(
    belief,
    game: StochasticGame,
    equilibrium: EquilibriumSolution,
    d_alpha: float,
    d_beta: float,
    lam: float,
    lp_tol: float = minimax.DEFAULT_TOL,
) -> list[DiagnosticsRecord]:
    """One diagnostics row per state at the belief's current stage."""
    records = []
    _, qt1, qt2, coupled = coupled_iterates(belief, equilibrium, d_beta)
    for s in range(game.n_states):
        q1s = belief.q[0][s]
        q2s = belief.q[1][s]
        val1 = minimax.minimax_value(q1s, tol=lp_tol).value
        val2 = minimax.minimax_value(q2s, tol=lp_tol).value
        v1 = float(_value_rows(q1s, belief.pi[0][s]).max())
        v2 = float(_value_rows(q2s, belief.pi[1][s]).max())
        e1 = v1 - val1
        e2 = v2 - val2
        qbar = q1s + q2s.T
        qbar_max = float(np.abs(qbar).max())
        xi = lam * qbar_max - (val1 + val2)
        records.append(
            DiagnosticsRecord(
                k=belief.stage,
                s=s,
                v1=v1,
                v2=v2,
                vbar=v1 + v2,
                e1=e1,
                e2=e2,
                qbar_max=qbar_max,
                qbar_min=float(qbar.min()),
                qtilde1_max=float(np.abs(qt1[s]).max()),
                qtilde2_max=float(np.abs(qt2[s]).max()),
                gamma_min=float(coupled[s].min()),
                gamma_max=float(coupled[s].max()),
                V=max(0.0, d_alpha * e1 + e2 - xi),
            )
        )
    return records


def enforce_invariants(belief, game: StochasticGame, records, q_bound: float) -> None:
    """Abort when the learning state leaves its guaranteed envelope.

    Checks, per checkpoint: both tracking errors inside the sandwich
    [0, vbar - min qbar] up to SANDWICH_TOL; Q estimates inside the
    discounted payoff bound up to BOUND_TOL; belief rows on the simplex
    up to SIMPLEX_TOL; visit counts summing to the stage clock.
    """
    k = belief.stage
    for rec in records:
        hi = rec.vbar - rec.qbar_min + SANDWICH_TOL
        for name, e in (("e1", rec.e1), ("e2", rec.e2)):
            if not -SANDWICH_TOL <= e <= hi:
                raise InvariantViolation(
                    f"tracking error {name}={e!r} at stage {k}, state {rec.s} "
                    f"outside [-{SANDWICH_TOL}, {hi!r}]",
                    context={"k": k, "s": rec.s, "quantity": name, "value": e, "upper": hi},
                )
    for i in (0, 1):
        q_max = float(np.abs(belief.q[i]).max())
        if q_max > q_bound + BOUND_TOL:
            raise InvariantViolation(
                f"player {i + 1} Q estimate {q_max!r} exceeds bound {q_bound!r}",
                context={"k": k, "player": i + 1, "q_max": q_max, "bound": q_bound},
            )
        rows = belief.pi[i]
        if (rows < -SIMPLEX_TOL).any() or np.abs(rows.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
            worst = float(np.abs(rows.sum(axis=1) - 1.0).max())
            raise InvariantViolation(
                f"player {i + 1} belief rows left the simplex (worst sum error {worst!r})",
                context={"k": k, "player": i + 1, "sum_error": worst},
            )
    if int(belief.counts.sum()) != k:
        raise InvariantViolation(
            f"visit counts sum to {int(belief.counts.sum())}, stage clock is {k}",
            context={"k": k, "counts": belief.counts.tolist()},
        )


def lemma4_result_tail_start(horizon: int) -> int:
    return int(0.9 * (horizon + 1))


@dataclass(frozen=True)
class Lemma4Result:
    """Trajectory of the comparison recursion and its tail statistics."""

    trajectory: np.ndarray
    tail_min: float
    tail_start: int


def lemma4_recursion(
    y0,
    gamma: float,
    schedules,
    horizon: int,
    epsilon=None,
    pattern: str = "sync",
) -> Lemma4Result:
    """Iterate y(n) += beta_n (gamma min_m y(m) - y(n) + eps(n)) and track the tail.

    schedules is one StepSchedule for all entries or one per entry; each
    entry's step is indexed by that entry's own update count.  "sync"
    updates every entry each stage, "round_robin" updates entry k mod N at
    stage k.  epsilon may be None, a scalar, a per-stage vector, or a
    (stage, entry) array.  The tail minimum is taken over the final tenth
    of the recorded trajectory.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=np.float64)).copy()
    n_entries = y.shape[0]
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"contraction modulus must lie in [0, 1), got {gamma}")
    if pattern not in ("sync", "round_robin"):
        raise ValueError(f"pattern must be 'sync' or 'round_robin', got {pattern!r}")
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    if isinstance(schedules, StepSchedule):
        schedules = [schedules] * n_entries
    if len(schedules) != n_entries:
        raise ValueError(f"need one schedule per entry, got {len(schedules)} for {n_entries}")
    if epsilon is None:
        eps = np.zeros((horizon, n_entries))
    else:
        eps = np.asarray(epsilon, dtype=np.float64)
        if eps.ndim == 0:
            eps = np.full((horizon, n_entries), float(eps))
        elif eps.ndim == 1:
            if eps.shape[0] != horizon:
                raise ValueError(f"per-stage noise must have length {horizon}, got {eps.shape}")
            eps = np.repeat(eps[:, None], n_entries, axis=1)
        elif eps.shape != (horizon, n_entries):
            raise ValueError(f"noise shape {eps.shape} does not match ({horizon}, {n_entries})")

    max_updates = horizon if pattern == "sync" else (horizon + n_entries - 1) // n_entries
    tables = np.empty((n_entries, max(max_updates, 1)))
    for n in range(n_entries):
        tables[n] = schedules[n].table(max(max_updates, 1))

    traj = np.empty((horizon + 1, n_entries))
    traj[0] = y
    for k in range(horizon):
        m = y.min()
        if pattern == "sync":
            y = y + tables[:, k] * (gamma * m - y + eps[k])
        else:
            n = k % n_entries
            c = k // n_entries
            y[n] += tables[n, c] * (gamma * m - y[n] + eps[k, n])
        traj[k + 1] = y
    start = lemma4_result_tail_start(horizon)
    return Lemma4Result(trajectory=traj, tail_min=float(traj[start:].min()), tail_start=start)
