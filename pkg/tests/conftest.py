"""Shared game builders for the test suite."""

import numpy as np
import pytest

from hetfp import StochasticGame, generate_random_game

PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


def matrix_game(payoff, gamma=0.0):
    """Wrap a single payoff matrix as a one-state game."""
    payoff = np.asarray(payoff, dtype=np.float64)[None, :, :]
    kernel = np.ones(payoff.shape + (1,), dtype=np.float64)
    return StochasticGame(payoff=payoff, kernel=kernel, gamma=gamma)


def cycle_game(n_states=2, n_actions=(2, 2), gamma=0.5, payoff=None):
    """Deterministic cycle s -> s+1 mod n regardless of actions."""
    if payoff is None:
        rng = np.random.default_rng(0)
        payoff = rng.uniform(-1.0, 1.0, size=(n_states, *n_actions))
    else:
        payoff = np.asarray(payoff, dtype=np.float64)
    kernel = np.zeros((n_states, *n_actions, n_states))
    for s in range(n_states):
        kernel[s, :, :, (s + 1) % n_states] = 1.0
    return StochasticGame(payoff=payoff, kernel=kernel, gamma=gamma)


@pytest.fixture
def pennies_game():
    return matrix_game(PENNIES)


@pytest.fixture(scope="session")
def small_game():
    return generate_random_game(3, (2, 3), 0.7, min_transition_prob=0.05, seed=5)
