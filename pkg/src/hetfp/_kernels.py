"""Stage-loop kernel for the learning dynamics, one source for both backends.

The same function body runs either numba-compiled (the default) or as
plain interpreted numpy, chosen once at import time by the HETFP_NUMBA
environment variable ("0", "false", "no", "off" disable it; a missing or
broken numba also falls back).  The body is written as scalar loops over
preallocated arrays with no library calls inside, so both backends execute
the same IEEE operations in the same order and trajectories agree bit for
bit.

Step-size tables are precomputed by the caller and indexed by the visit
count of the current state; uniforms are pre-drawn with three columns per
stage (tie break of player 1, tie break of player 2, transition), consumed
at fixed positions regardless of the tie rule so streams do not depend on
it.
"""

import os

import numpy as np

# Schedules are indexed by the number of strictly prior visits of the
# updated state; the first update of a state uses index 0 + COUNT_OFFSET.
COUNT_OFFSET = 0


def _advance_impl(
    payoff,
    kernel,
    gamma,
    pi1,
    pi2,
    q1,
    q2,
    counts,
    state,
    n_steps,
    alpha1_tab,
    alpha2_tab,
    beta1_tab,
    beta2_tab,
    uniform_ties,
    uniforms,
    states_out,
    actions_out,
):
    n_states = payoff.shape[0]
    n_a1 = payoff.shape[1]
    n_a2 = payoff.shape[2]
    ev1 = np.empty(n_a1)
    ev2 = np.empty(n_a2)
    v1 = np.empty(n_states)
    v2 = np.empty(n_states)
    for t in range(n_steps):
        s = state
        c = counts[s]

        # Best responses at the visited state from pre-update beliefs.
        best1 = -np.inf
        for i1 in range(n_a1):
            acc = 0.0
            for i2 in range(n_a2):
                acc += q1[s, i1, i2] * pi1[s, i2]
            ev1[i1] = acc
            if acc > best1:
                best1 = acc
        best2 = -np.inf
        for i2 in range(n_a2):
            acc = 0.0
            for i1 in range(n_a1):
                acc += q2[s, i2, i1] * pi2[s, i1]
            ev2[i2] = acc
            if acc > best2:
                best2 = acc
        if uniform_ties:
            n_tied = 0
            for i1 in range(n_a1):
                if ev1[i1] == best1:
                    n_tied += 1
            pick = int(uniforms[t, 0] * n_tied)
            if pick >= n_tied:
                pick = n_tied - 1
            a1 = 0
            seen = 0
            for i1 in range(n_a1):
                if ev1[i1] == best1:
                    if seen == pick:
                        a1 = i1
                        break
                    seen += 1
            n_tied = 0
            for i2 in range(n_a2):
                if ev2[i2] == best2:
                    n_tied += 1
            pick = int(uniforms[t, 1] * n_tied)
            if pick >= n_tied:
                pick = n_tied - 1
            a2 = 0
            seen = 0
            for i2 in range(n_a2):
                if ev2[i2] == best2:
                    if seen == pick:
                        a2 = i2
                        break
                    seen += 1
        else:
            a1 = 0
            for i1 in range(n_a1):
                if ev1[i1] == best1:
                    a1 = i1
                    break
            a2 = 0
            for i2 in range(n_a2):
                if ev2[i2] == best2:
                    a2 = i2
                    break

        # Value estimates of every state from pre-update beliefs; targets
        # below must not see this stage's belief or Q changes.
        for sp in range(n_states):
            best = -np.inf
            for i1 in range(n_a1):
                acc = 0.0
                for i2 in range(n_a2):
                    acc += q1[sp, i1, i2] * pi1[sp, i2]
                if acc > best:
                    best = acc
            v1[sp] = best
            best = -np.inf
            for i2 in range(n_a2):
                acc = 0.0
                for i1 in range(n_a1):
                    acc += q2[sp, i2, i1] * pi2[sp, i1]
                if acc > best:
                    best = acc
            v2[sp] = best

        al1 = alpha1_tab[c]
        al2 = alpha2_tab[c]
        be1 = beta1_tab[c]
        be2 = beta2_tab[c]

        # Empirical belief updates at the visited state only.
        for i2 in range(n_a2):
            obs = 1.0 if i2 == a2 else 0.0
            pi1[s, i2] += al1 * (obs - pi1[s, i2])
        for i1 in range(n_a1):
            obs = 1.0 if i1 == a1 else 0.0
            pi2[s, i1] += al2 * (obs - pi2[s, i1])

        # Q updates at the visited state cover every joint action.
        for b1 in range(n_a1):
            for b2 in range(n_a2):
                cont1 = 0.0
                cont2 = 0.0
                for sp in range(n_states):
                    pr = kernel[s, b1, b2, sp]
                    cont1 += pr * v1[sp]
                    cont2 += pr * v2[sp]
                r = payoff[s, b1, b2]
                q1[s, b1, b2] += be1 * (r + gamma * cont1 - q1[s, b1, b2])
                q2[s, b2, b1] += be2 * (-r + gamma * cont2 - q2[s, b2, b1])

        u = uniforms[t, 2]
        nxt = n_states - 1
        cum = 0.0
        for sp in range(n_states):
            cum += kernel[s, a1, a2, sp]
            if u < cum:
                nxt = sp
                break

        counts[s] = c + 1
        states_out[t] = s
        actions_out[t, 0] = a1
        actions_out[t, 1] = a2
        state = nxt
    return state


def _numba_requested() -> bool:
    flag = os.environ.get("HETFP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit

        advance_stages = njit(cache=True, nogil=True)(_advance_impl)
        NUMBA_ENABLED = True
    except ImportError:
        advance_stages = _advance_impl
else:
    advance_stages = _advance_impl

BACKEND = "numba" if NUMBA_ENABLED else "numpy"
