"""Census of distinct optimal policies over random transition functions.

For a fixed reward table, transition functions are drawn from the random-MDP
recipe, a planner is run on each, and the greedy policy is recorded. Sampling
stops once ``stop_window`` consecutive draws add no new policy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from planreg.mdp import ValidationError, greedy_policy, solve_batch
from planreg.parallel import ordered_map
from planreg.random_mdp import RandomMdpSpec, draw_transitions, sample_reward_table
from planreg.rng import RngStream, as_generator

SAMPLE_CAP = 2_000_000
BATCH = 1024
CSV_HEADER = ["mode", "param", "reward_seed", "distinct_count", "samples_drawn"]


@dataclass(frozen=True)
class ReducedDiscount:
    gamma_check: float
    mode = "gamma"

    def __post_init__(self):
        if not 0.0 <= self.gamma_check < 1.0:
            raise ValidationError("gamma_check must lie in [0, 1)")

    @property
    def param(self) -> float:
        return self.gamma_check


@dataclass(frozen=True)
class EpsilonGreedy:
    """Plan with the epsilon-greedy Bellman fixed point at the MDP discount."""

    epsilon: float
    mode = "epsilon"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError("epsilon must lie in [0, 1]")

    @property
    def param(self) -> float:
        return self.epsilon


@dataclass(frozen=True)
class EpsilonSoftened:
    """Plan with standard value iteration on epsilon-softened transitions."""

    epsilon: float
    mode = "softened"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError("epsilon must lie in [0, 1]")

    @property
    def param(self) -> float:
        return self.epsilon


PLANNERS = {"gamma": ReducedDiscount, "epsilon": EpsilonGreedy, "softened": EpsilonSoftened}


@dataclass(frozen=True)
class CensusConfig:
    planner: ReducedDiscount | EpsilonGreedy | EpsilonSoftened
    stop_window: int = 5000
    vi_sweeps: int = 10
    spec: RandomMdpSpec = field(default_factory=RandomMdpSpec)
    sample_cap: int = SAMPLE_CAP

    def __post_init__(self):
        if self.stop_window < 1 or self.vi_sweeps < 1:
            raise ValidationError("stop_window and vi_sweeps must be positive")


@dataclass
class CensusResult:
    distinct_count: int
    samples_drawn: int
    policy_set: set
    truncated: bool = False


def canonical_policy_key(policy) -> tuple[int, ...]:
    return tuple(int(a) for a in np.asarray(policy).ravel())


def plan_batch(reward_table: np.ndarray, transitions: np.ndarray, config: CensusConfig) -> np.ndarray:
    """Greedy policies, shape ``(B, S)``, for a batch of transition tensors."""
    B = transitions.shape[0]
    rewards = np.broadcast_to(reward_table, (B,) + reward_table.shape)
    planner = config.planner
    sweeps = config.vi_sweeps
    if isinstance(planner, ReducedDiscount):
        q = solve_batch(rewards, transitions, planner.gamma_check, 0.0, sweeps, tol=0.0)
    elif isinstance(planner, EpsilonGreedy):
        q = solve_batch(rewards, transitions, config.spec.discount, planner.epsilon, sweeps, tol=0.0)
    else:
        eps = planner.epsilon
        softened = (1.0 - eps) * transitions + eps * transitions.mean(axis=2, keepdims=True)
        q = solve_batch(rewards, softened, config.spec.discount, 0.0, sweeps, tol=0.0)
    return greedy_policy(q)


def run_census(reward_table, config: CensusConfig, rng: RngStream | np.random.Generator) -> CensusResult:
    reward_table = np.asarray(reward_table, dtype=float)
    spec = config.spec
    if reward_table.shape != (spec.n_states, spec.n_actions):
        raise ValidationError("reward table does not match the RandomMdpSpec dimensions")
    gen = as_generator(rng)
    seen: set = set()
    drawn = 0
    quiet = 0
    while drawn < config.sample_cap:
        batch = min(BATCH, config.sample_cap - drawn)
        policies = plan_batch(reward_table, draw_transitions(gen, spec, (batch,)), config)
        for row in policies.tolist():
            drawn += 1
            key = tuple(row)
            if key in seen:
                quiet += 1
                if quiet >= config.stop_window:
                    return CensusResult(len(seen), drawn, seen)
            else:
                seen.add(key)
                quiet = 0
    return CensusResult(len(seen), drawn, seen, truncated=True)


@dataclass(frozen=True)
class CensusRow:
    mode: str
    param: float
    reward_seed: int
    distinct_count: int
    samples_drawn: int
    truncated: bool = False


def _census_task(task):
    mode, value, draw, seed, stop_window, vi_sweeps, spec = task
    root = RngStream(seed)
    rewards = sample_reward_table(spec, root.substream(0, draw))
    config = CensusConfig(PLANNERS[mode](value), stop_window, vi_sweeps, spec)
    # Every grid value of one reward draw sees the same transition sequence.
    result = run_census(rewards, config, root.substream(1, draw))
    return CensusRow(mode, value, draw, result.distinct_count, result.samples_drawn, result.truncated)


def run_census_sweep(mode: str, values, reward_draws: int, seed: int, stop_window: int = 5000,
                     vi_sweeps: int = 10, spec: RandomMdpSpec | None = None, threads: int = 1) -> list[CensusRow]:
    """Census for every (grid value, reward draw); rows ordered by value then draw."""
    if mode not in PLANNERS:
        raise ValidationError(f"unknown census mode {mode!r}")
    spec = spec or RandomMdpSpec()
    tasks = [(mode, float(v), k, seed, stop_window, vi_sweeps, spec)
             for v in values for k in range(reward_draws)]
    return ordered_map(_census_task, tasks, threads)


def write_census_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for r in rows:
            out.writerow([r.mode, f"{r.param:.17g}", r.reward_seed, r.distinct_count, r.samples_drawn])
