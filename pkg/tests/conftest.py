from fractions import Fraction

import numpy as np
import pytest

from planreg.mdp import Mdp
from planreg.random_mdp import RandomMdpSpec, sample_mdp
from planreg.rng import RngStream


def exact_state_values(rewards, transitions, gamma, policy):
    """V^pi by Gauss-Jordan elimination over rationals, returned as floats.

    Independent of numpy's solver: every entry is converted to an exact
    Fraction first, so the only rounding is the final conversion.
    """
    S, A = np.asarray(rewards).shape
    policy = np.asarray(policy, dtype=float)
    if policy.ndim == 1:
        policy = np.eye(A)[policy.astype(int)]
    g = Fraction(gamma)
    pi = [[Fraction(float(policy[s, a])) for a in range(A)] for s in range(S)]
    r = [sum(pi[s][a] * Fraction(float(rewards[s][a])) for a in range(A)) for s in range(S)]
    m = [[(1 if s == t else 0) - g * sum(pi[s][a] * Fraction(float(transitions[s][a][t])) for a in range(A))
          for t in range(S)] + [r[s]] for s in range(S)]
    for col in range(S):
        pivot = next(i for i in range(col, S) if m[i][col] != 0)
        m[col], m[pivot] = m[pivot], m[col]
        lead = m[col][col]
        m[col] = [x / lead for x in m[col]]
        for i in range(S):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return np.array([float(m[s][S]) for s in range(S)])


@pytest.fixture
def self_loop_mdp():
    return Mdp(np.array([[1.0], [0.0]]), np.array([[[1.0, 0.0]], [[0.0, 1.0]]]), 0.5)


@pytest.fixture
def seed7_mdp():
    return sample_mdp(RandomMdpSpec(), RngStream(7))


def random_mdp(seed, n_states=3, n_actions=2, branching=None, discount=0.9):
    spec = RandomMdpSpec(n_states, n_actions, branching or n_states, discount)
    return sample_mdp(spec, RngStream(seed))


# One line per acceptance criterion, printed at the end of the session.
acceptance_log: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_log:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
