"""Heterogeneous two-timescale fictitious play over a stochastic game.

Both players keep empirical beliefs about the opponent's play and
Q-estimates of their own discounted payoffs.  At the visited state the
belief moves toward the observed action with an alpha step and the
Q-estimates of every joint action move toward their one-stage targets
with a beta step; unvisited states are untouched.  All updates of one
stage are simultaneous: every target is formed from the pre-update pair.
Each player draws steps from its own schedules, indexed by the visit
count of the updated state, which is what makes the dynamics
heterogeneous in both rates and timescales.

Arrays are kept in each player's own layout: beliefs over the opponent's
actions, Q tensors as (state, own action, opponent action).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from ._kernels import BACKEND, COUNT_OFFSET, advance_stages
from .game import StochasticGame, payoff_bound
from .schedules import StepSchedule, asymptotic_ratio, schedule_eval
from .shapley import EquilibriumSolution, solve_fixed_point

TIE_RULES = ("lowest", "uniform")


@dataclass
class BeliefState:
    """Joint learning state: beliefs, Q-estimates, visit counts, stage clock.

    pi[i - 1] is player i's belief row per state over the opponent's
    actions; q[i - 1] is player i's Q tensor in own layout.  counts[s] is
    the number of completed updates at state s, which is also the schedule
    index the next update at s will use (shifted by COUNT_OFFSET).
    """

    pi: tuple[np.ndarray, np.ndarray]
    q: tuple[np.ndarray, np.ndarray]
    counts: np.ndarray
    stage: int = 0

    def copy(self) -> "BeliefState":
        return BeliefState(
            pi=(self.pi[0].copy(), self.pi[1].copy()),
            q=(self.q[0].copy(), self.q[1].copy()),
            counts=self.counts.copy(),
            stage=self.stage,
        )


@dataclass(frozen=True)
class StepRecord:
    """What one stage did: stage index, state, actions, realized step sizes."""

    k: int
    s: int
    a1: int
    a2: int
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float


@dataclass(frozen=True)
class RunConfig:
    """Everything one trajectory depends on."""

    game: StochasticGame
    alpha: tuple[StepSchedule, StepSchedule]
    beta: tuple[StepSchedule, StepSchedule]
    horizon: int
    seed: int = 0
    checkpoint_every: int = 1000
    tie_rule: str = "lowest"
    initial_state: int | str = 0
    lam: float | None = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if self.checkpoint_every < 1:
            raise ValueError(f"checkpoint period must be >= 1, got {self.checkpoint_every}")
        if self.tie_rule not in TIE_RULES:
            raise ValueError(f"tie_rule must be one of {TIE_RULES}, got {self.tie_rule!r}")
        if isinstance(self.initial_state, str):
            if self.initial_state != "uniform":
                raise ValueError(f"initial_state must be an index or 'uniform', got {self.initial_state!r}")
        elif not 0 <= int(self.initial_state) < self.game.n_states:
            raise ValueError(
                f"initial_state {self.initial_state} out of range for {self.game.n_states} states"
            )
        if self.lam is not None and not self.lam > 1.0:
            raise ValueError(f"offset weight must exceed 1, got {self.lam}")


def initial_belief(game: StochasticGame, pi=None, q=None) -> BeliefState:
    """Uniform beliefs and zero Q unless explicit arrays are given."""
    n_s = game.n_states
    m1, m2 = game.n_actions
    if pi is None:
        pi1 = np.full((n_s, m2), 1.0 / m2)
        pi2 = np.full((n_s, m1), 1.0 / m1)
    else:
        pi1 = np.array(pi[0], dtype=np.float64)
        pi2 = np.array(pi[1], dtype=np.float64)
        if pi1.shape != (n_s, m2) or pi2.shape != (n_s, m1):
            raise ValueError("belief shapes do not match the game")
    if q is None:
        q1 = np.zeros((n_s, m1, m2))
        q2 = np.zeros((n_s, m2, m1))
    else:
        q1 = np.array(q[0], dtype=np.float64)
        q2 = np.array(q[1], dtype=np.float64)
        if q1.shape != (n_s, m1, m2) or q2.shape != (n_s, m2, m1):
            raise ValueError("q shapes do not match the game")
    return BeliefState(pi=(pi1, pi2), q=(q1, q2), counts=np.zeros(n_s, dtype=np.int64), stage=0)


def _expected_rows(q_slice: np.ndarray, belief_row: np.ndarray) -> np.ndarray:
    # Sequential scalar sums in the same order as the stage kernel, so the
    # convenience API agrees with trajectories bit for bit.
    n_own, n_opp = q_slice.shape
    out = np.empty(n_own)
    for i in range(n_own):
        acc = 0.0
        for j in range(n_opp):
            acc += q_slice[i, j] * belief_row[j]
        out[i] = acc
    return out


def best_response(q_slice, belief_row, tie_rule: str = "lowest", rng=None) -> int:
    """Own action maximizing expected payoff under the belief.

    Ties are exact float equalities of the expected values; "lowest" picks
    the smallest index, "uniform" draws one tied index with the rng.
    """
    q = np.asarray(q_slice, dtype=np.float64)
    b = np.asarray(belief_row, dtype=np.float64)
    if q.ndim != 2 or b.shape != (q.shape[1],):
        raise ValueError(f"incompatible shapes {q.shape} and {b.shape}")
    if tie_rule not in TIE_RULES:
        raise ValueError(f"tie_rule must be one of {TIE_RULES}, got {tie_rule!r}")
    ev = _expected_rows(q, b)
    best = ev.max()
    tied = np.flatnonzero(ev == best)
    if tie_rule == "lowest" or tied.size == 1:
        return int(tied[0])
    if rng is None:
        raise ValueError("uniform tie rule needs an rng")
    pick = min(int(rng.random() * tied.size), tied.size - 1)
    return int(tied[pick])


def value_estimate(q, pi, s: int) -> float:
    """Belief-induced value max over own actions of the expected Q at state s."""
    q = np.asarray(q, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    return float(_expected_rows(q[s], pi[s]).max())


def _schedule_tables(config: RunConfig, n: int):
    return (
        config.alpha[0].table(n),
        config.alpha[1].table(n),
        config.beta[0].table(n),
        config.beta[1].table(n),
    )


def step(config: RunConfig, belief: BeliefState, s: int, rng) -> tuple[BeliefState, int, StepRecord]:
    """Advance one stage from state s; returns the new state of learning.

    Consumes exactly three uniforms from the rng, matching run(), so a
    stage-by-stage drive of step() reproduces a run() trajectory on the
    same generator state.
    """
    if not 0 <= s < config.game.n_states:
        raise ValueError(f"state {s} out of range")
    out = belief.copy()
    c = int(belief.counts[s])
    tabs = _schedule_tables(config, int(belief.counts.max()) + 1)
    uniforms = rng.random((1, 3))
    states_out = np.empty(1, dtype=np.int64)
    actions_out = np.empty((1, 2), dtype=np.int64)
    nxt = advance_stages(
        config.game.payoff,
        config.game.kernel,
        config.game.gamma,
        out.pi[0],
        out.pi[1],
        out.q[0],
        out.q[1],
        out.counts,
        s,
        1,
        *tabs,
        config.tie_rule == "uniform",
        uniforms,
        states_out,
        actions_out,
    )
    out.stage = belief.stage + 1
    idx = c + COUNT_OFFSET
    record = StepRecord(
        k=belief.stage,
        s=s,
        a1=int(actions_out[0, 0]),
        a2=int(actions_out[0, 1]),
        alpha1=float(tabs[0][idx]),
        alpha2=float(tabs[1][idx]),
        beta1=float(tabs[2][idx]),
        beta2=float(tabs[3][idx]),
    )
    return out, int(nxt), record


def resolve_offsets(config: RunConfig) -> tuple[float, float, float]:
    """Asymptotic ratios of the two timescales and the norm-offset weight."""
    d_alpha = asymptotic_ratio(config.alpha[0], config.alpha[1])
    d_beta = asymptotic_ratio(config.beta[0], config.beta[1])
    lam = config.lam
    if lam is None:
        lam = diagnostics.default_lambda(config.game.gamma, d_alpha, d_beta)
    else:
        interval = diagnostics.lambda_interval(config.game.gamma, d_alpha, d_beta)
        if interval is None or not interval[0] < lam < interval[1]:
            warnings.warn(
                f"offset weight {lam} lies outside the admissible interval "
                f"{interval}; diagnostics remain well defined but the "
                "decrease guarantee does not apply",
                stacklevel=2,
            )
    return d_alpha, d_beta, lam


def run(
    config: RunConfig,
    equilibrium: EquilibriumSolution | None = None,
    initial: BeliefState | None = None,
) -> tuple[BeliefState, list]:
    """Simulate one seeded trajectory with diagnostics at checkpoint stages.

    Uniform variates are pre-drawn in blocks of three per stage (both tie
    breaks and the transition), so trajectories do not depend on the block
    size or the tie rule.  Diagnostics are recorded at stages that are
    multiples of the checkpoint period, and the learning-state invariants
    are enforced there; a breach raises InvariantViolation.

    `initial` overrides the uniform-belief, zero-estimate starting point;
    the caller's object is copied, never mutated.  Stage numbering
    continues from the supplied state's stage.
    """
    game = config.game
    if equilibrium is None:
        equilibrium = solve_fixed_point(game)
    d_alpha, d_beta, lam = resolve_offsets(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    if config.initial_state == "uniform":
        state = int(rng.integers(game.n_states))
    else:
        state = int(config.initial_state)
    if initial is None:
        belief = initial_belief(game)
    else:
        belief = initial.copy()
        if belief.q[0].shape != (game.n_states, *game.n_actions):
            raise ValueError(
                f"initial belief shaped {belief.q[0].shape} does not fit a game "
                f"with {game.n_states} states and {game.n_actions} actions"
            )
    start = belief.stage
    tabs = _schedule_tables(config, int(belief.counts.max()) + config.horizon + 1)
    q_bound = payoff_bound(game)[1]
    period = config.checkpoint_every
    uniform_ties = config.tie_rule == "uniform"
    states_out = np.empty(period, dtype=np.int64)
    actions_out = np.empty((period, 2), dtype=np.int64)
    records = []
    k = 0
    while k < config.horizon:
        n = min(period, config.horizon - k)
        uniforms = rng.random((n, 3))
        state = int(
            advance_stages(
                game.payoff,
                game.kernel,
                game.gamma,
                belief.pi[0],
                belief.pi[1],
                belief.q[0],
                belief.q[1],
                belief.counts,
                state,
                n,
                *tabs,
                uniform_ties,
                uniforms,
                states_out[:n],
                actions_out[:n],
            )
        )
        k += n
        belief.stage = start + k
        if k % period == 0:
            recs = diagnostics.checkpoint_records(belief, game, equilibrium, d_alpha, d_beta, lam)
            diagnostics.enforce_invariants(belief, game, recs, q_bound)
            records.extend(recs)
    return belief, records
