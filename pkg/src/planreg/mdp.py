"""Finite MDPs and exact solvers.

Conventions used throughout the package:

* rewards ``R[s, a]`` and transitions ``T[s, a, s']`` are dense numpy arrays;
* a deterministic policy is an integer vector of actions, one per state;
* a stochastic policy is a ``(n_states, n_actions)`` row-stochastic array;
* Q-functions are ``(n_states, n_actions)`` float arrays;
* a weighting is a probability vector over states (uniform by default).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, replace

import numpy as np

ROW_TOL = 1e-9
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 10_000


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


@dataclass(frozen=True, eq=False)
class Mdp:
    rewards: np.ndarray
    transitions: np.ndarray
    discount: float

    def __post_init__(self):
        rewards = np.array(self.rewards, dtype=float)
        transitions = np.array(self.transitions, dtype=float)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "discount", float(self.discount))
        rewards.flags.writeable = False
        transitions.flags.writeable = False
        self.validate()

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]

    @property
    def r_max(self) -> float:
        return float(self.rewards.max())

    def validate(self):
        R, T = self.rewards, self.transitions
        if R.ndim != 2 or R.shape[0] < 1 or R.shape[1] < 1:
            raise ValidationError(f"rewards must be a non-empty (S, A) table, got shape {R.shape}")
        S, A = R.shape
        if T.shape != (S, A, S):
            raise ValidationError(f"transitions must have shape {(S, A, S)}, got {T.shape}")
        if not np.all(np.isfinite(R)) or np.any(R < 0):
            raise ValidationError("rewards must be finite and non-negative")
        if not np.all(np.isfinite(T)) or np.any(T < 0):
            raise ValidationError("transition probabilities must be finite and non-negative")
        if np.max(np.abs(T.sum(axis=-1) - 1.0)) > ROW_TOL:
            raise ValidationError("every transition row must sum to 1")
        if not 0.0 <= self.discount < 1.0:
            raise ValidationError(f"discount must lie in [0, 1), got {self.discount}")

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.discount == other.discount
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.transitions, other.transitions)
        )

    __hash__ = None


def uniform_weighting(n_states: int) -> np.ndarray:
    return np.full(n_states, 1.0 / n_states)


def as_stochastic(policy, n_states: int, n_actions: int) -> np.ndarray:
    """Lift a deterministic policy to point-mass rows; validate either kind."""
    policy = np.asarray(policy)
    if policy.ndim == 1:
        if policy.shape[0] != n_states:
            raise ValidationError(f"policy covers {policy.shape[0]} states, MDP has {n_states}")
        if not np.issubdtype(policy.dtype, np.integer):
            raise ValidationError("deterministic policies must hold integer actions")
        if np.any(policy < 0) or np.any(policy >= n_actions):
            raise ValidationError("policy action out of range")
        probs = np.zeros((n_states, n_actions))
        probs[np.arange(n_states), policy] = 1.0
        return probs
    if policy.shape != (n_states, n_actions):
        raise ValidationError(f"policy shape {policy.shape} != {(n_states, n_actions)}")
    policy = policy.astype(float)
    if np.any(policy < 0) or np.max(np.abs(policy.sum(axis=1) - 1.0)) > ROW_TOL:
        raise ValidationError("stochastic policy rows must be non-negative and sum to 1")
    return policy


def _check_weighting(w, n_states: int) -> np.ndarray:
    if w is None:
        return uniform_weighting(n_states)
    w = np.asarray(w, dtype=float)
    if w.shape != (n_states,) or np.any(w < 0) or abs(w.sum() - 1.0) > ROW_TOL:
        raise ValidationError("weighting must be a probability vector over states")
    return w


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 <= epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in [0, 1], got {epsilon}")
    return epsilon


def solve_batch(
    rewards: np.ndarray,
    transitions: np.ndarray,
    discounts,
    epsilons=0.0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Iterate the (epsilon-greedy) Bellman optimality backup on a batch of MDPs.

    ``rewards`` is ``(B, S, A)``, ``transitions`` is ``(B, S, A, S)``; discounts
    and epsilons broadcast to ``(B,)``. The successor value of a Q-table is
    ``(1 - eps) * max_a Q + (eps / |A|) * sum_a Q``, which is the plain optimality
    backup when ``eps == 0``.

    Every member starts at zero and stops independently the first time a sweep
    moves it by at most ``tol`` in max-norm; the returned iterate then has a
    Bellman residual of at most ``discount * tol``. With ``tol == 0`` exactly
    ``max_iters`` sweeps are applied.
    """
    rewards = np.asarray(rewards, dtype=float)
    B, S, A = rewards.shape
    flat_t = np.asarray(transitions, dtype=float).reshape(B, S * A, S)
    gammas = np.broadcast_to(np.asarray(discounts, dtype=float), (B,))
    eps = np.broadcast_to(np.asarray(epsilons, dtype=float), (B,))
    keep, spread = (1.0 - eps)[:, None], (eps / A)[:, None]

    q = np.zeros((B, S, A))
    if tol <= 0:
        for _ in range(max_iters):
            v = keep * q.max(axis=2) + spread * q.sum(axis=2)
            q = rewards + gammas[:, None, None] * (flat_t @ v[:, :, None]).reshape(B, S, A)
        return q

    # Work on a compacted copy of the unconverged members; re-gather only
    # when one of them finishes.
    active = np.arange(B)
    r_a, t_a, g_a = rewards, flat_t, gammas[:, None, None]
    k_a, s_a, q_a = keep, spread, q
    for _ in range(max_iters):
        v = k_a * q_a.max(axis=2) + s_a * q_a.sum(axis=2)
        new = r_a + g_a * (t_a @ v[:, :, None]).reshape(-1, S, A)
        going = np.abs(new - q_a).max(axis=(1, 2)) > tol
        q_a = new
        if not going.all():
            q[active] = q_a
            active, q_a = active[going], q_a[going]
            if active.size == 0:
                return q
            r_a, t_a, g_a = rewards[active], flat_t[active], gammas[active, None, None]
            k_a, s_a = keep[active], spread[active]
    q[active] = q_a
    warnings.warn(f"value iteration hit max_iters={max_iters} before reaching tol={tol}")
    return q


def value_iteration(mdp: Mdp, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Optimal Q-function by value iteration from the all-zeros table."""
    return solve_batch(mdp.rewards[None], mdp.transitions[None], mdp.discount, 0.0, max_iters, tol)[0]


def epsilon_greedy_value_iteration(
    mdp: Mdp, epsilon: float, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """Fixed point of the Bellman system for the optimal epsilon-greedy policy."""
    epsilon = _check_epsilon(epsilon)
    return solve_batch(mdp.rewards[None], mdp.transitions[None], mdp.discount, epsilon, max_iters, tol)[0]


def greedy_policy(q: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. ties go to the lowest action.
    return np.argmax(np.asarray(q), axis=-1)


def bellman_backup(mdp: Mdp, q: np.ndarray, policy=None, epsilon: float = 0.0) -> np.ndarray:
    """One backup of ``q``: optimality (policy None) or evaluation of ``policy``."""
    if policy is None:
        v = (1.0 - epsilon) * q.max(axis=1) + (epsilon / mdp.n_actions) * q.sum(axis=1)
    else:
        probs = as_stochastic(policy, mdp.n_states, mdp.n_actions)
        v = (probs * q).sum(axis=1)
    return mdp.rewards + mdp.discount * mdp.transitions @ v


def state_values(mdp: Mdp, policy) -> np.ndarray:
    """V^pi by solving ``(I - gamma T^pi) V = R^pi``."""
    probs = as_stochastic(policy, mdp.n_states, mdp.n_actions)
    t_pi = np.einsum("sa,sat->st", probs, mdp.transitions)
    r_pi = (probs * mdp.rewards).sum(axis=1)
    return np.linalg.solve(np.eye(mdp.n_states) - mdp.discount * t_pi, r_pi)


def evaluate_policy(mdp: Mdp, policy, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Q^pi for a deterministic or stochastic policy.

    The state values come from a direct linear solve; if the resulting table
    misses ``tol`` (ill-conditioning near discount 1), evaluation backups
    polish it until the residual is within tolerance.
    """
    probs = as_stochastic(policy, mdp.n_states, mdp.n_actions)
    q = mdp.rewards + mdp.discount * mdp.transitions @ state_values(mdp, probs)
    for _ in range(DEFAULT_MAX_ITERS):
        new = bellman_backup(mdp, q, probs)
        if np.max(np.abs(new - q)) <= tol:
            return new
        q = new
    return q


def scalar_value(mdp: Mdp, policy, w=None) -> float:
    """``sum_s w_s sum_a pi(s, a) Q^pi(s, a)``, uniform ``w`` unless given."""
    w = _check_weighting(w, mdp.n_states)
    return float(w @ state_values(mdp, policy))


def epsilon_greedy_policy(base, epsilon: float, n_actions: int) -> np.ndarray:
    epsilon = _check_epsilon(epsilon)
    base = np.asarray(base)
    probs = np.full((base.shape[0], n_actions), epsilon / n_actions)
    probs[np.arange(base.shape[0]), base] += 1.0 - epsilon
    return probs


def epsilon_soften_mdp(mdp: Mdp, epsilon: float) -> Mdp:
    """Mix each action's dynamics with the action-averaged dynamics.

    ``T_eps(s, a) = (1 - eps) T(s, a) + (eps / |A|) sum_a' T(s, a')``.
    Rewards and discount are left untouched.
    """
    epsilon = _check_epsilon(epsilon)
    T = mdp.transitions
    mixed = (1.0 - epsilon) * T + epsilon * T.mean(axis=1, keepdims=True)
    return replace(mdp, transitions=mixed)


def with_discount(mdp: Mdp, gamma_check: float) -> Mdp:
    if not 0.0 <= gamma_check < 1.0:
        raise ValidationError(f"discount must lie in [0, 1), got {gamma_check}")
    return replace(mdp, discount=gamma_check)


def all_deterministic_policies(n_states: int, n_actions: int) -> np.ndarray:
    """Every deterministic policy, shape ``(n_actions ** n_states, n_states)``."""
    return np.array(list(itertools.product(range(n_actions), repeat=n_states)), dtype=np.int64)


def batch_scalar_values(mdp: Mdp, policies: np.ndarray, w=None) -> np.ndarray:
    """Scalar values of many policies at once.

    ``policies`` is either ``(P, S)`` integer actions or ``(P, S, A)``
    probabilities; the linear systems are solved as one stacked call.
    """
    w = _check_weighting(w, mdp.n_states)
    policies = np.asarray(policies)
    S, A = mdp.n_states, mdp.n_actions
    if policies.ndim == 2:
        probs = np.zeros(policies.shape + (A,))
        np.put_along_axis(probs, policies[..., None], 1.0, axis=-1)
    else:
        probs = policies.astype(float)
    t_pi = np.einsum("psa,sat->pst", probs, mdp.transitions)
    r_pi = np.einsum("psa,sa->ps", probs, mdp.rewards)
    lhs = np.eye(S)[None] - mdp.discount * t_pi
    v = np.linalg.solve(lhs, r_pi[..., None])[..., 0]
    return v @ w
