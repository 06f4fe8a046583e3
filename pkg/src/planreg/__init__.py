"""Tabular planning laboratory for regularized certainty-equivalence planning."""

from planreg.mdp import (
    Mdp,
    epsilon_greedy_policy,
    epsilon_greedy_value_iteration,
    epsilon_soften_mdp,
    evaluate_policy,
    greedy_policy,
    scalar_value,
    value_iteration,
    with_discount,
)
from planreg.rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "Mdp",
    "RngStream",
    "epsilon_greedy_policy",
    "epsilon_greedy_value_iteration",
    "epsilon_soften_mdp",
    "evaluate_policy",
    "greedy_policy",
    "scalar_value",
    "value_iteration",
    "with_discount",
]
