import numpy as np
import pytest

from conftest import PENNIES
from hetfp import SolverError, expected_payoff, minimax_value, support_enumeration

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def random_matrix(rng, max_side=5, lo=-10.0, hi=10.0):
    m = rng.integers(2, max_side + 1)
    n = rng.integers(2, max_side + 1)
    return rng.uniform(lo, hi, size=(m, n))


def test_matching_pennies():
    sol = minimax_value(PENNIES)
    assert sol.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(sol.row_strategy, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(sol.col_strategy, [0.5, 0.5], atol=1e-12)
    assert 0.0 <= sol.gap <= 1e-9


def test_two_by_two_mixed():
    sol = minimax_value([[3.0, 1.0], [1.0, 2.0]])
    assert sol.value == pytest.approx(5.0 / 3.0, abs=1e-12)
    np.testing.assert_allclose(sol.row_strategy, [1.0 / 3.0, 2.0 / 3.0], atol=1e-12)
    np.testing.assert_allclose(sol.col_strategy, [1.0 / 3.0, 2.0 / 3.0], atol=1e-12)


def test_rock_paper_scissors_uniform():
    sol = minimax_value(RPS)
    assert sol.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(sol.row_strategy, np.full(3, 1.0 / 3.0), atol=1e-12)
    np.testing.assert_allclose(sol.col_strategy, np.full(3, 1.0 / 3.0), atol=1e-12)


def test_one_by_one():
    sol = minimax_value([[-2.5]])
    assert sol.value == pytest.approx(-2.5, abs=1e-12)
    assert sol.row_strategy.tolist() == [1.0]
    assert sol.col_strategy.tolist() == [1.0]


def test_dominant_row():
    sol = minimax_value([[1.0, 1.0], [0.0, 0.0]])
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    assert sol.row_strategy[0] == pytest.approx(1.0, abs=1e-12)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        minimax_value(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        minimax_value([1.0, 2.0])
    with pytest.raises(ValueError):
        minimax_value([[np.nan, 1.0], [0.0, 2.0]])


def test_strategies_live_on_the_simplex():
    rng = np.random.default_rng(7)
    for _ in range(50):
        sol = minimax_value(random_matrix(rng))
        for p in (sol.row_strategy, sol.col_strategy):
            assert p.min() >= 0.0
            assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_agrees_with_support_enumeration():
    # acceptance criterion for the solver pair is run over 500 matrices in
    # test_acceptance; this is the fast development-loop version
    rng = np.random.default_rng(123)
    for _ in range(60):
        M = random_matrix(rng)
        lp = minimax_value(M)
        en = support_enumeration(M)
        assert lp.value == pytest.approx(en.value, abs=1e-8)
        assert lp.gap <= 1e-9
        assert en.gap <= 1e-8


def test_support_enumeration_limited_to_five():
    with pytest.raises(ValueError, match="5x5"):
        support_enumeration(np.zeros((6, 3)))


def test_support_enumeration_examples():
    en = support_enumeration(PENNIES)
    assert en.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(en.row_strategy, [0.5, 0.5], atol=1e-9)
    en = support_enumeration([[3.0, 1.0], [1.0, 2.0]])
    assert en.value == pytest.approx(5.0 / 3.0, abs=1e-9)


class TestAxioms:
    """Value-operator properties on random matrices, each within 2 * tol."""

    tol = 1e-9

    def pairs(self, count=40, seed=29):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            shape = (rng.integers(2, 6), rng.integers(2, 6))
            yield rng.uniform(-10, 10, shape), rng.uniform(-10, 10, shape)

    def test_shift_invariance(self):
        for M, _ in self.pairs():
            c = 3.75
            assert minimax_value(M + c).value == pytest.approx(
                minimax_value(M).value + c, abs=2 * self.tol
            )

    def test_role_antisymmetry(self):
        # swapping maximizer and minimizer negates the value
        for M, _ in self.pairs():
            assert minimax_value(-M.T).value == pytest.approx(
                -minimax_value(M).value, abs=2 * self.tol
            )

    def test_monotonicity(self):
        for M, N in self.pairs():
            lo, hi = np.minimum(M, N), np.maximum(M, N)
            assert minimax_value(lo).value <= minimax_value(hi).value + 2 * self.tol

    def test_nonexpansiveness(self):
        for M, N in self.pairs():
            diff = abs(minimax_value(M).value - minimax_value(N).value)
            assert diff <= np.abs(M - N).max() + 2 * self.tol


def test_expected_payoff_pure_actions():
    M = np.arange(6.0).reshape(2, 3)
    for i in range(2):
        for j in range(3):
            x = np.eye(2)[i]
            y = np.eye(3)[j]
            assert expected_payoff(M, x, y) == M[i, j]


def test_expected_payoff_shape_check():
    with pytest.raises(ValueError):
        expected_payoff(PENNIES, [0.5, 0.5], [1.0, 0.0, 0.0])


def test_optimal_strategies_guarantee_the_value():
    rng = np.random.default_rng(41)
    for _ in range(25):
        M = random_matrix(rng)
        sol = minimax_value(M)
        # playing the optimal mix secures the value against every pure reply
        assert (sol.row_strategy @ M).min() >= sol.value - 1e-9
        assert (M @ sol.col_strategy).max() <= sol.value + 1e-9


def test_solver_error_carries_matrix():
    err = SolverError("boom", matrix=PENNIES)
    np.testing.assert_array_equal(err.matrix, PENNIES)
