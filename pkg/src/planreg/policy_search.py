"""REINFORCE with a tabular baseline on a learned model, sweeping policy width.

Policies are one-hidden-layer ReLU networks over one-hot states. Because the
input is one-hot, the full ``(S, A)`` action-probability table comes from a
single forward pass, and an episode's policy gradient reduces to a gradient
on that table followed by ordinary backpropagation.

Training is vectorized over independent runs: every array below carries a
leading run axis, and each run draws from its own RNG stream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from planreg.estimation import Dataset, estimate_model, generate_dataset
from planreg.experiments import confidence_interval_95
from planreg.mdp import Mdp, ValidationError, batch_scalar_values
from planreg.parallel import ordered_map
from planreg.random_mdp import RandomMdpSpec, sample_mdp
from planreg.rng import RngStream

SWEEP_HEADER = ["hidden_units", "value_on_model", "vm_ci_low", "vm_ci_high",
                "value_on_true", "vt_ci_low", "vt_ci_high", "runs"]
DEFAULT_HIDDEN = (1, 2, 5, 10, 25, 50, 100, 250)
# Default true environment for the width sweep.
SWEEP_SPEC = RandomMdpSpec(n_states=20, n_actions=4, branching=5, discount=0.95)


@dataclass
class MlpPolicy:
    w1: np.ndarray  # (h, S)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (A, h)
    b2: np.ndarray  # (A,)

    @property
    def hidden_units(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def init(cls, hidden_units: int, n_states: int, n_actions: int, rng) -> MlpPolicy:
        """Weights uniform in +/- 1/sqrt(fan_in); biases start at zero."""
        gen = rng if isinstance(rng, np.random.Generator) else rng.generator()
        a1, a2 = 1.0 / math.sqrt(n_states), 1.0 / math.sqrt(hidden_units)
        return cls(
            gen.uniform(-a1, a1, (hidden_units, n_states)),
            np.zeros(hidden_units),
            gen.uniform(-a2, a2, (n_actions, hidden_units)),
            np.zeros(n_actions),
        )

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> MlpPolicy:
        return MlpPolicy(*(p.copy() for p in self.params()))

    def table(self) -> np.ndarray:
        """Action probabilities for every state, shape ``(S, A)``."""
        return _stack([self])[4][0]


class Episode(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def policy_forward(policy: MlpPolicy, state: int) -> np.ndarray:
    hidden = np.maximum(policy.w1[:, state] + policy.b1, 0.0)
    return softmax(policy.w2 @ hidden + policy.b2)


def _forward(w1, b1, w2, b2):
    """Batched forward over all one-hot states: pre-activations, hidden, probs."""
    pre = np.swapaxes(w1, 1, 2) + b1[:, None, :]          # (R, S, h)
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ np.swapaxes(w2, 1, 2) + b2[:, None, :]  # (R, S, A)
    return pre, hidden, softmax(logits)


def _stack(policies):
    w1, b1, w2, b2 = (np.stack(p) for p in zip(*(pol.params() for pol in policies)))
    return (w1, b1, w2, b2) + (_forward(w1, b1, w2, b2)[2],)


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """``G_t = sum_k gamma^k r_{t+k}`` along the last axis."""
    out = np.empty_like(rewards, dtype=float)
    acc = np.zeros(rewards.shape[:-1])
    for t in range(rewards.shape[-1] - 1, -1, -1):
        acc = rewards[..., t] + gamma * acc
        out[..., t] = acc
    return out


def _reinforce_update(params, baseline, states, actions, rewards, step_size, baseline_step, gamma):
    """In-place REINFORCE-with-baseline update for a batch of runs.

    ``params`` is ``[w1, b1, w2, b2]`` with a leading run axis, ``baseline`` is
    ``(R, S)``, episode arrays are ``(R, H)``. The policy ascends
    ``sum_t gamma^t (G_t - b(s_t)) log pi(a_t | s_t)`` with ``b`` held fixed; the
    baseline descends ``0.5 * sum_t (G_t - b(s_t))^2``.
    """
    w1, b1, w2, b2 = params
    R, H = states.shape
    S, A = w1.shape[2], w2.shape[1]
    runs = np.arange(R)[:, None]
    pre, hidden, probs = _forward(w1, b1, w2, b2)

    returns = discounted_returns(rewards, gamma)
    delta = returns - baseline[runs, states]
    coef = (gamma ** np.arange(H)) * delta

    # d(surrogate)/d(logits): coef_t * (onehot(a_t) - pi(.|s_t)) summed per state.
    g_logits = np.zeros((R, S, A))
    np.add.at(g_logits, (runs, states, actions), coef)
    visit_weight = np.zeros((R, S))
    np.add.at(visit_weight, (runs, states), coef)
    g_logits -= visit_weight[:, :, None] * probs

    g_w2 = np.swapaxes(g_logits, 1, 2) @ hidden          # (R, A, h)
    g_b2 = g_logits.sum(axis=1)
    g_pre = (g_logits @ w2) * (pre > 0)                   # (R, S, h)
    g_w1 = np.swapaxes(g_pre, 1, 2)                       # (R, h, S)
    g_b1 = g_pre.sum(axis=1)

    w1 += step_size * g_w1
    b1 += step_size * g_b1
    w2 += step_size * g_w2
    b2 += step_size * g_b2

    g_base = np.zeros((R, S))
    np.add.at(g_base, (runs, states), delta)
    baseline += baseline_step * g_base


def reinforce_step(policy: MlpPolicy, baseline: np.ndarray, episode: Episode, step_size: float,
                   gamma: float, baseline_step: float | None = None) -> tuple[MlpPolicy, np.ndarray]:
    """One REINFORCE-with-baseline update from one episode; inputs are not modified.

    The baseline step defaults to a tenth of the policy step.
    """
    if baseline_step is None:
        baseline_step = 0.1 * step_size
    params = [p[None].copy() for p in policy.params()]
    base = np.array(baseline, dtype=float)[None].copy()
    _reinforce_update(params, base, np.asarray(episode.states)[None], np.asarray(episode.actions)[None],
                      np.asarray(episode.rewards, dtype=float)[None], step_size, baseline_step, gamma)
    return MlpPolicy(*(p[0] for p in params)), base[0]


def surrogate_objective(policy: MlpPolicy, baseline: np.ndarray, episode: Episode, gamma: float) -> float:
    """The scalar whose gradient :func:`reinforce_step` ascends (baseline frozen)."""
    returns = discounted_returns(np.asarray(episode.rewards, dtype=float), gamma)
    coef = gamma ** np.arange(len(returns)) * (returns - np.asarray(baseline)[episode.states])
    logp = np.array([math.log(policy_forward(policy, s)[a]) for s, a in zip(episode.states, episode.actions)])
    return float(coef @ logp)


def baseline_loss(baseline: np.ndarray, episode: Episode, gamma: float) -> float:
    returns = discounted_returns(np.asarray(episode.rewards, dtype=float), gamma)
    return float(0.5 * np.sum((returns - np.asarray(baseline)[episode.states]) ** 2))


def simulate_episodes(mdp: Mdp, probs: np.ndarray, horizon: int, draws: np.ndarray) -> Episode:
    """Roll out one episode per run inside ``mdp``.

    ``probs`` is ``(R, S, A)``; ``draws`` is ``(R, 1 + 2 * horizon)`` uniforms
    used for the start state, then alternately the action and the successor.
    """
    R = probs.shape[0]
    S, A = mdp.n_states, mdp.n_actions
    runs = np.arange(R)
    action_cdf = np.cumsum(probs, axis=-1)
    next_cdf = np.cumsum(mdp.transitions, axis=-1)
    states = np.empty((R, horizon), dtype=np.int64)
    actions = np.empty((R, horizon), dtype=np.int64)
    s = np.minimum((draws[:, 0] * S).astype(np.int64), S - 1)
    for t in range(horizon):
        states[:, t] = s
        a = (action_cdf[runs, s] <= draws[:, 1 + 2 * t, None]).sum(axis=1)
        a = np.minimum(a, A - 1)
        actions[:, t] = a
        row = mdp.transitions[s, a]
        nxt = (next_cdf[s, a] <= draws[:, 2 + 2 * t, None]).sum(axis=1)
        # Rounding can leave the CDF total a hair below 1; fall back to the
        # last successor with positive mass.
        overflow = (nxt >= S) | (row[runs, np.minimum(nxt, S - 1)] == 0)
        if overflow.any():
            last = S - 1 - np.argmax(row[:, ::-1] > 0, axis=1)
            nxt = np.where(overflow, np.minimum(nxt, last), nxt)
        s = nxt
    return Episode(states, actions, mdp.rewards[states, actions])


@dataclass(frozen=True)
class SweepConfig:
    hidden_list: tuple[int, ...] = DEFAULT_HIDDEN
    runs: int = 40
    episodes_per_run: int = 2000
    episode_horizon: int = 40
    step_size: float = 0.005
    # The baseline must track returns of order R / (1 - gamma) within a few
    # hundred episodes, so the sweep uses its own step rather than a tenth
    # of the policy step.
    baseline_step: float | None = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.hidden_list or min(self.hidden_list) < 1:
            raise ValidationError("hidden_list must hold positive widths")
        if min(self.runs, self.episodes_per_run, self.episode_horizon) < 1:
            raise ValidationError("runs, episodes_per_run and episode_horizon must be positive")
        if self.step_size <= 0:
            raise ValidationError("step_size must be positive")


def train_runs(model: Mdp, hidden_units: int, config: SweepConfig) -> list[MlpPolicy]:
    """Train ``config.runs`` independent policies of one width on ``model``.

    Run ``r`` draws its initial weights and all episode randomness from
    stream ``(seed, hidden_units, r)``. The tabular baseline starts at
    ``mean(R) / (1 - gamma)`` in every state.
    """
    S, A = model.n_states, model.n_actions
    streams = [RngStream(config.seed).substream(hidden_units, r) for r in range(config.runs)]
    gens = [st.generator() for st in streams]
    policies = [MlpPolicy.init(hidden_units, S, A, g) for g in gens]
    params = [np.stack(p) for p in zip(*(pol.params() for pol in policies))]
    # Start the baseline at the mean-reward return so early advantages are
    # centred rather than uniformly positive.
    baseline = np.full((config.runs, S), model.rewards.mean() / (1.0 - model.discount))
    beta = 0.1 * config.step_size if config.baseline_step is None else config.baseline_step
    width = 1 + 2 * config.episode_horizon
    for _ in range(config.episodes_per_run):
        draws = np.stack([g.random(width) for g in gens])
        probs = _forward(*params)[2]
        ep = simulate_episodes(model, probs, config.episode_horizon, draws)
        _reinforce_update(params, baseline, ep.states, ep.actions, ep.rewards,
                          config.step_size, beta, model.discount)
    return [MlpPolicy(*(p[r] for p in params)) for r in range(config.runs)]


@dataclass(frozen=True)
class SweepRow:
    hidden_units: int
    value_on_model: float
    vm_ci_low: float
    vm_ci_high: float
    value_on_true: float
    vt_ci_low: float
    vt_ci_high: float
    runs: int


def _width_task(args):
    true_mdp, model, h, config = args
    tables = np.stack([p.table() for p in train_runs(model, h, config)])
    return batch_scalar_values(model, tables), batch_scalar_values(true_mdp, tables)


def run_hidden_sweep(true_mdp: Mdp, dataset: Dataset, config: SweepConfig, threads: int = 1) -> list[SweepRow]:
    """Train on the certainty-equivalence model of ``dataset``; score exactly on both MDPs."""
    model = estimate_model(dataset, true_mdp.n_states, true_mdp.n_actions, true_mdp.discount)
    results = ordered_map(_width_task, [(true_mdp, model, h, config) for h in config.hidden_list], threads)
    rows = []
    for h, (on_model, on_true) in zip(config.hidden_list, results):
        if config.runs >= 2:
            vm, vt = confidence_interval_95(on_model), confidence_interval_95(on_true)
        else:
            vm, vt = (on_model[0],) * 2, (on_true[0],) * 2
        rows.append(SweepRow(h, float(on_model.mean()), *vm, float(on_true.mean()), *vt, config.runs))
    return rows


def sweep_problem(seed: int, trajectories: int = 20, horizon: int = 10,
                  spec: RandomMdpSpec = SWEEP_SPEC) -> tuple[Mdp, Dataset]:
    """The true MDP and its dataset for a sweep seeded with ``seed``.

    Both come from substreams ``(0, .)`` of the seed; training runs use
    ``(h, r)`` with ``h >= 1``, so the streams never collide.
    """
    root = RngStream(seed)
    true_mdp = sample_mdp(spec, root.substream(0, 0))
    return true_mdp, generate_dataset(true_mdp, trajectories, horizon, root.substream(0, 1))


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(SWEEP_HEADER)
        for r in rows:
            out.writerow([r.hidden_units] + [f"{x:.17g}" for x in (
                r.value_on_model, r.vm_ci_low, r.vm_ci_high, r.value_on_true, r.vt_ci_low, r.vt_ci_high
            )] + [r.runs])
