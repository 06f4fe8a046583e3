"""Closed-form loss bounds and exhaustive checkers for the restricted-class inequalities.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from planreg.mdp import (
    Mdp,
    ValidationError,
    all_deterministic_policies,
    batch_scalar_values,
    epsilon_greedy_policy,
    epsilon_greedy_value_iteration,
    greedy_policy,
    scalar_value,
    value_iteration,
)

COMPARE_SLACK = 1e-9
MAX_ENUMERATED_POLICIES = 1024


@dataclass(frozen=True)
class BoundQuery:
    gamma: float
    gamma_check: float
    r_max: float
    n: int
    delta: float
    n_states: int
    n_actions: int
    pi_count: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 <= self.gamma_check <= self.gamma < 1.0:
            raise ValidationError("need 0 <= gamma_check <= gamma < 1")
        if self.n < 1 or self.n_states < 1 or self.n_actions < 1:
            raise ValidationError("n, n_states and n_actions must be positive")
        if self.pi_count < 1:
            raise ValidationError("pi_count must be at least 1")
        if self.r_max < 0:
            raise ValidationError("r_max must be non-negative")


def _estimation_term(r_max, discount, n, n_states, n_actions, pi_count, delta):
    log_term = math.log(2.0 * n_states * n_actions * pi_count / delta)
    return 2.0 * r_max / (1.0 - discount) ** 2 * math.sqrt(log_term / (2.0 * n))


def jiang_bound(q: BoundQuery) -> float:
    """Horizon-bias term plus the estimation term at the planning discount."""
    bias = (q.gamma - q.gamma_check) / ((1.0 - q.gamma) * (1.0 - q.gamma_check)) * q.r_max
    return bias + _estimation_term(q.r_max, q.gamma_check, q.n, q.n_states, q.n_actions, q.pi_count, q.delta)


def pi_count_estimate(gamma_check: float) -> float:
    """Smooth fit to the census of optimal-policy counts on ten-state chains."""
    if not 0.0 <= gamma_check < 1.0:
        raise ValidationError("gamma_check must lie in [0, 1)")
    return 11.0 * math.exp(gamma_check) - 10.0


def simulation_bound(q: BoundQuery) -> float:
    """Bound on twice the worst per-policy value error of a sampled model."""
    return _estimation_term(q.r_max, q.gamma, q.n, q.n_states, q.n_actions, q.pi_count, q.delta)


def epsilon_gap_bound(epsilon: float, gamma: float, r_max: float) -> float:
    if not 0.0 <= epsilon <= 1.0:
        raise ValidationError("epsilon must lie in [0, 1]")
    if not 0.0 <= gamma < 1.0:
        raise ValidationError("gamma must lie in [0, 1)")
    return r_max * epsilon / ((1.0 - gamma) * (1.0 - gamma * (1.0 - epsilon)))


@dataclass(frozen=True)
class Theorem1Report:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class Lemma2Report:
    gap: float
    bound: float
    holds: bool


def optimal_scalar_value_exhaustive(mdp: Mdp, w=None) -> tuple[np.ndarray, float]:
    """Best deterministic policy and its value by enumerating every policy."""
    if mdp.n_actions ** mdp.n_states > MAX_ENUMERATED_POLICIES:
        raise ValidationError(
            f"{mdp.n_actions}^{mdp.n_states} policies is too many to enumerate "
            f"(limit {MAX_ENUMERATED_POLICIES})"
        )
    policies = all_deterministic_policies(mdp.n_states, mdp.n_actions)
    values = batch_scalar_values(mdp, policies, w)
    best = int(np.argmax(values))
    return policies[best], float(values[best])


def verify_theorem1(true_mdp: Mdp, approx_mdp: Mdp, restricted_set, w=None) -> Theorem1Report:
    """Check the restricted-class loss decomposition on one instance, exactly."""
    if (true_mdp.rewards.shape != approx_mdp.rewards.shape
            or true_mdp.discount != approx_mdp.discount):
        raise ValidationError("true and approximate MDPs must share dimensions and discount")
    policies = np.asarray(restricted_set, dtype=float)
    if policies.ndim != 3 or policies.shape[0] == 0:
        raise ValidationError("restricted_set must be a non-empty list of (S, A) policies")
    _, v_opt = optimal_scalar_value_exhaustive(true_mdp, w)
    v_true = batch_scalar_values(true_mdp, policies, w)
    v_model = batch_scalar_values(approx_mdp, policies, w)
    rho = int(np.argmax(v_true))
    rho_hat = int(np.argmax(v_model))
    lhs = abs(v_opt - v_true[rho_hat])
    rhs = abs(v_opt - v_true[rho]) + 2.0 * float(np.max(np.abs(v_true - v_model)))
    return Theorem1Report(lhs, rhs, lhs <= rhs + COMPARE_SLACK)


def verify_lemma2(mdp: Mdp, epsilon: float, w=None) -> Lemma2Report:
    """Value lost by the best epsilon-greedy policy versus the unrestricted optimum."""
    best = greedy_policy(value_iteration(mdp))
    smoothed = epsilon_greedy_policy(greedy_policy(epsilon_greedy_value_iteration(mdp, epsilon)),
                                     epsilon, mdp.n_actions)
    gap = scalar_value(mdp, best, w) - scalar_value(mdp, smoothed, w)
    bound = epsilon_gap_bound(epsilon, mdp.discount, mdp.r_max)
    return Lemma2Report(gap, bound, gap <= bound + COMPARE_SLACK)


def worst_value_error(true_mdp: Mdp, approx_mdp: Mdp, policies, w=None) -> float:
    """``max_p |V^p_M - V^p_Mhat|`` over a set of policies."""
    return float(np.max(np.abs(batch_scalar_values(true_mdp, policies, w)
                               - batch_scalar_values(approx_mdp, policies, w))))
