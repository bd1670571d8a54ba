"""Learning dynamics and exact solvers for zero-sum stochastic games."""

from .game import (
    GameFormatError,
    StochasticGame,
    ValidationReport,
    generate_random_game,
    load_game,
    payoff_bound,
    save_game,
    validate_game,
)
from .minimax import MinimaxSolution, SolverError, expected_payoff, minimax_value, support_enumeration
from .schedules import StepSchedule, asymptotic_ratio, schedule_eval
from .shapley import (
    EquilibriumSolution,
    NonconvergenceError,
    apply_operator,
    load_equilibrium,
    save_equilibrium,
    solve_fixed_point,
)
from .dynamics import BeliefState, RunConfig, StepRecord, best_response, initial_belief, run, step, value_estimate
from .diagnostics import (
    AssumptionReport,
    DiagnosticsRecord,
    InvariantViolation,
    check_assumptions,
    coupled_iterates,
    lambda_interval,
    lemma4_recursion,
    lyapunov,
    tracking_error,
)

__version__ = "0.1.0"
