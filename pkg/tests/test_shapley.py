import numpy as np
import pytest

from conftest import PENNIES, cycle_game, matrix_game
from hetfp import (
    NonconvergenceError,
    StochasticGame,
    apply_operator,
    generate_random_game,
    load_equilibrium,
    minimax_value,
    save_equilibrium,
    solve_fixed_point,
)


@pytest.fixture(scope="module")
def reference_game():
    return generate_random_game(3, (4, 4), 0.8, min_transition_prob=0.05, seed=42)


@pytest.fixture(scope="module")
def reference_solution(reference_game):
    return solve_fixed_point(reference_game)


def test_undiscounted_fixed_point_is_the_stage_payoff():
    game = matrix_game([[3.0, 1.0], [1.0, 2.0]], gamma=0.0)
    sol = solve_fixed_point(game)
    np.testing.assert_array_equal(sol.q_star[0], game.payoff)
    np.testing.assert_array_equal(sol.q_star[1], -np.swapaxes(game.payoff, 1, 2))
    assert sol.values[0][0] == pytest.approx(5.0 / 3.0, abs=1e-9)
    assert sol.residual == 0.0


def test_pennies_fixed_point():
    sol = solve_fixed_point(matrix_game(PENNIES, gamma=0.5))
    # the stage game has value zero, so discounting adds nothing
    np.testing.assert_allclose(sol.q_star[0], PENNIES[None], atol=1e-10)
    assert sol.values[0][0] == pytest.approx(0.0, abs=1e-9)
    assert sol.values[1][0] == pytest.approx(0.0, abs=1e-9)


def test_single_state_closed_form():
    # with one state, val* = val(r) / (1 - gamma) and Q* = r + gamma val*
    game = matrix_game([[3.0, 1.0], [1.0, 2.0]], gamma=0.6)
    sol = solve_fixed_point(game, tol=1e-12)
    val = (5.0 / 3.0) / 0.4
    assert sol.values[0][0] == pytest.approx(val, abs=1e-9)
    np.testing.assert_allclose(sol.q_star[0][0], game.payoff[0] + 0.6 * val, atol=1e-9)


def test_deterministic_cycle_closed_form():
    game = cycle_game(gamma=0.5)
    val0 = minimax_value(game.payoff[0]).value
    val1 = minimax_value(game.payoff[1]).value
    v0 = (val0 + 0.5 * val1) / (1.0 - 0.25)
    v1 = (val1 + 0.5 * val0) / (1.0 - 0.25)
    sol = solve_fixed_point(game, tol=1e-12)
    assert sol.values[0][0] == pytest.approx(v0, abs=1e-9)
    assert sol.values[0][1] == pytest.approx(v1, abs=1e-9)
    np.testing.assert_allclose(sol.q_star[0][0], game.payoff[0] + 0.5 * v1, atol=1e-9)
    np.testing.assert_allclose(sol.q_star[0][1], game.payoff[1] + 0.5 * v0, atol=1e-9)


def test_operator_contracts(reference_game):
    rng = np.random.default_rng(3)
    shape = reference_game.payoff.shape
    for _ in range(20):
        qa = rng.uniform(-5, 5, shape)
        qb = rng.uniform(-5, 5, shape)
        fa = apply_operator(reference_game, 1, qa)
        fb = apply_operator(reference_game, 1, qb)
        lhs = np.abs(fa - fb).max()
        rhs = reference_game.gamma * np.abs(qa - qb).max()
        assert lhs <= rhs + 1e-8


def test_operator_shape_check(reference_game):
    with pytest.raises(ValueError):
        apply_operator(reference_game, 1, np.zeros((3, 4, 5)))


def test_residual_is_the_one_step_displacement(reference_game, reference_solution):
    sol = reference_solution
    for player in (1, 2):
        q = sol.q_star[player - 1]
        displacement = np.abs(apply_operator(reference_game, player, q) - q).max()
        assert displacement <= sol.residual + 1e-15
    assert sol.residual <= 1e-10


def test_zero_sum_invariants(reference_solution):
    sol = reference_solution
    total = sol.q_star[0] + np.swapaxes(sol.q_star[1], 1, 2)
    assert np.abs(total).max() <= 1e-8
    assert np.abs(sol.values[0] + sol.values[1]).max() <= 1e-8


def test_strategies_secure_the_values(reference_solution):
    sol = reference_solution
    for i in (0, 1):
        for s in range(sol.values[i].shape[0]):
            guaranteed = (sol.strategies[i][s] @ sol.q_star[i][s]).min()
            assert guaranteed >= sol.values[i][s] - 1e-8
            assert sol.strategies[i][s].min() >= 0.0
            assert sol.strategies[i][s].sum() == pytest.approx(1.0, abs=1e-12)


def test_mirrored_game_swaps_the_players(reference_game, reference_solution):
    mirrored = StochasticGame(
        payoff=-np.swapaxes(reference_game.payoff, 1, 2),
        kernel=np.swapaxes(reference_game.kernel, 1, 2),
        gamma=reference_game.gamma,
    )
    sol_m = solve_fixed_point(mirrored)
    # the mirrored first player runs exactly the original second player's
    # iteration, so the tensors agree bit for bit
    np.testing.assert_array_equal(sol_m.q_star[0], reference_solution.q_star[1])
    np.testing.assert_array_equal(sol_m.q_star[1], reference_solution.q_star[0])


def test_nonconvergence_raises(reference_game):
    with pytest.raises(NonconvergenceError) as info:
        solve_fixed_point(reference_game, max_iter=3)
    assert info.value.residual > 0.0


def test_solution_roundtrip(tmp_path, reference_solution):
    path = tmp_path / "equilibrium.json"
    save_equilibrium(reference_solution, path)
    loaded = load_equilibrium(path)
    for i in (0, 1):
        np.testing.assert_array_equal(loaded.q_star[i], reference_solution.q_star[i])
        np.testing.assert_array_equal(loaded.values[i], reference_solution.values[i])
        np.testing.assert_array_equal(loaded.strategies[i], reference_solution.strategies[i])
    assert loaded.residual == reference_solution.residual
    assert loaded.iterations == reference_solution.iterations
    assert loaded.gamma == reference_solution.gamma


def test_save_is_deterministic(tmp_path, reference_solution):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_equilibrium(reference_solution, a)
    save_equilibrium(reference_solution, b)
    assert a.read_bytes() == b.read_bytes()
