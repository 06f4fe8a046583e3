"""Monte-Carlo U-curve and bound-curve experiments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from planreg.bounds import BoundQuery, jiang_bound, pi_count_estimate, simulation_bound, worst_value_error
from planreg.estimation import estimate_model, estimate_model_per_sa, generate_dataset
from planreg.mdp import (
    Mdp,
    ValidationError,
    batch_scalar_values,
    greedy_policy,
    scalar_value,
    solve_batch,
    value_iteration,
)
from planreg.parallel import ordered_map
from planreg.random_mdp import RandomMdpSpec, sample_mdp
from planreg.rng import RngStream

GAMMA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
EPSILON_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
UCURVE_HEADER = ["mode", "param", "n", "mean_loss", "ci_low", "ci_high", "replicates"]
BOUND_HEADER = ["n", "gamma_check", "bound"]
Z95 = 1.96


def confidence_interval_95(samples) -> tuple[float, float]:
    """Normal-approximation interval: mean +/- 1.96 * sample sd / sqrt(count)."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValidationError("need at least two samples for a confidence interval")
    mean = x.mean()
    half = Z95 * x.std(ddof=1) / math.sqrt(x.size)
    return float(mean - half), float(mean + half)


def optimal_value(mdp: Mdp, w=None) -> float:
    return scalar_value(mdp, greedy_policy(value_iteration(mdp)), w)


def empirical_loss(true_mdp: Mdp, plan_policy, w=None) -> float:
    """Value given up in the true MDP by following ``plan_policy`` instead of its optimum."""
    return optimal_value(true_mdp, w) - scalar_value(true_mdp, plan_policy, w)


@dataclass(frozen=True)
class UCurveConfig:
    mode: str = "gamma"
    grid: tuple[float, ...] = GAMMA_GRID
    n_list: tuple[int, ...] = (5, 10, 20, 50)
    replicates: int = 1000
    horizon: int = 10
    spec: RandomMdpSpec = field(default_factory=RandomMdpSpec)
    seed: int = 0
    # Epsilon mode only: plan with the epsilon-greedy fixed point instead of
    # value iteration on softened transitions.
    fixed_point: bool = False

    def __post_init__(self):
        if self.mode not in ("gamma", "epsilon"):
            raise ValidationError(f"mode must be 'gamma' or 'epsilon', got {self.mode!r}")
        if self.replicates < 2:
            raise ValidationError("need at least two replicates")
        if not self.grid or not self.n_list:
            raise ValidationError("grid and n_list must be non-empty")
        if min(self.n_list) < 1 or self.horizon < 1:
            raise ValidationError("n values and horizon must be positive")
        for v in self.grid:
            if self.mode == "gamma" and not 0.0 <= v < 1.0:
                raise ValidationError(f"gamma_check {v} outside [0, 1)")
            if self.mode == "epsilon" and not 0.0 <= v <= 1.0:
                raise ValidationError(f"epsilon {v} outside [0, 1]")


@dataclass(frozen=True)
class UCurveRow:
    mode: str
    param: float
    n: int
    mean_loss: float
    ci_low: float
    ci_high: float
    replicates: int


@dataclass
class UCurveResult:
    rows: list[UCurveRow]
    losses: np.ndarray  # (replicates, len(n_list), len(grid))

    def cell(self, n: int, param: float) -> UCurveRow:
        for row in self.rows:
            if row.n == n and row.param == param:
                return row
        raise KeyError((n, param))

    def curve(self, n: int) -> list[UCurveRow]:
        return [row for row in self.rows if row.n == n]


def planning_problems(model: Mdp, mode: str, grid, fixed_point: bool = False):
    """Stacked ``(rewards, transitions, discounts, epsilons)`` for :func:`solve_batch`."""
    grid = np.asarray(grid, dtype=float)
    G = grid.size
    R = np.broadcast_to(model.rewards, (G,) + model.rewards.shape)
    T = np.broadcast_to(model.transitions, (G,) + model.transitions.shape)
    gammas = np.full(G, model.discount)
    eps = np.zeros(G)
    if mode == "gamma":
        gammas = grid
    elif fixed_point:
        eps = grid
    else:
        mix = grid[:, None, None, None]
        T = (1.0 - mix) * T + mix * model.transitions.mean(axis=1, keepdims=True)
    return R, T, gammas, eps


def plan_policies(model: Mdp, mode: str, grid, fixed_point: bool = False) -> np.ndarray:
    """Greedy plans on ``model`` for every regularizer value, shape ``(len(grid), S)``."""
    return greedy_policy(solve_batch(*planning_problems(model, mode, grid, fixed_point)))


def replicate_losses(config: UCurveConfig, index: int) -> np.ndarray:
    """Losses for one replicate, shape ``(len(n_list), len(grid))``.

    One true MDP per replicate; each n gets its own dataset, shared by the
    whole grid. All planning problems of the replicate, plus the true MDP
    itself, are solved as one batch.
    """
    spec = config.spec
    stream = RngStream(config.seed, index)
    true_mdp = sample_mdp(spec, stream.substream(0))
    problems = [planning_problems(true_mdp, "gamma", [true_mdp.discount])]
    for n in config.n_list:
        data = generate_dataset(true_mdp, n, config.horizon, stream.substream(1, n))
        model = estimate_model(data, spec.n_states, spec.n_actions, spec.discount)
        problems.append(planning_problems(model, config.mode, config.grid, config.fixed_point))
    stacked = [np.concatenate(parts) for parts in zip(*problems)]
    plans = greedy_policy(solve_batch(*stacked))
    values = batch_scalar_values(true_mdp, plans)
    return (values[0] - values[1:]).reshape(len(config.n_list), len(config.grid))


def _replicate_task(args):
    return replicate_losses(*args)


def run_ucurve(config: UCurveConfig, threads: int = 1) -> UCurveResult:
    per_rep = ordered_map(_replicate_task, [(config, i) for i in range(config.replicates)], threads)
    losses = np.stack(per_rep)
    rows = []
    for j, n in enumerate(config.n_list):
        for k, param in enumerate(config.grid):
            sample = losses[:, j, k]
            lo, hi = confidence_interval_95(sample)
            rows.append(UCurveRow(config.mode, float(param), int(n), float(sample.mean()), lo, hi,
                                  config.replicates))
    return UCurveResult(rows, losses)


def run_bound_curve(n_list, grid=GAMMA_GRID, delta: float = 0.05, spec: RandomMdpSpec | None = None,
                    r_max: float = 1.0) -> list[tuple[int, float, float]]:
    """Rows ``(n, gamma_check, bound)`` using the smooth policy-count estimate."""
    spec = spec or RandomMdpSpec()
    rows = []
    for n in n_list:
        for g in grid:
            q = BoundQuery(spec.discount, float(g), r_max, int(n), delta, spec.n_states, spec.n_actions,
                           pi_count_estimate(g))
            rows.append((int(n), float(g), jiang_bound(q)))
    return rows


def bound_argmins(rows) -> dict[int, float]:
    best: dict[int, tuple[float, float]] = {}
    for n, g, b in rows:
        if n not in best or b < best[n][1]:
            best[n] = (g, b)
    return {n: g for n, (g, _) in best.items()}


@dataclass(frozen=True)
class SimulationCheck:
    trials: int
    violations: int
    half_bound: float
    worst_error: float

    @property
    def rate(self) -> float:
        return self.violations / self.trials


def simulation_bound_check(trials: int = 500, n: int = 20, delta: float = 0.1, n_policies: int = 8,
                           spec: RandomMdpSpec | None = None, seed: int = 0) -> SimulationCheck:
    """How often a per-pair sampled model misjudges some policy by more than the bound allows.

    A fixed set of ``n_policies`` random deterministic policies is drawn once,
    from substream 2 of ``seed``. Trial ``i`` draws a true MDP and a model with ``n`` next-state samples per
    state-action pair from stream ``(seed, i)``, and counts a violation when
    the worst value error over the set exceeds half the simulation bound.
    """
    spec = spec or RandomMdpSpec(discount=0.9)
    gen = RngStream(seed).substream(2).generator()
    policies = gen.integers(0, spec.n_actions, (n_policies, spec.n_states))
    q = BoundQuery(spec.discount, spec.discount, spec.reward_high, n, delta, spec.n_states, spec.n_actions,
                   n_policies)
    half = simulation_bound(q) / 2.0
    violations, worst = 0, 0.0
    for i in range(trials):
        stream = RngStream(seed, i)
        true_mdp = sample_mdp(spec, stream.substream(0))
        model = estimate_model_per_sa(true_mdp, n, stream.substream(1))
        err = worst_value_error(true_mdp, model, policies)
        worst = max(worst, err)
        violations += err > half
    return SimulationCheck(trials, violations, half, worst)


def write_ucurve_csv(result: UCurveResult, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(UCURVE_HEADER)
        for r in result.rows:
            out.writerow([r.mode, f"{r.param:.17g}", r.n, f"{r.mean_loss:.17g}", f"{r.ci_low:.17g}",
                          f"{r.ci_high:.17g}", r.replicates])


def write_bound_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(BOUND_HEADER)
        for n, g, b in rows:
            out.writerow([n, f"{g:.17g}", f"{b:.17g}"])
