"""Trajectory datasets and maximum-likelihood (certainty-equivalence) models."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from planreg.mdp import Mdp, ValidationError
from planreg.rng import RngStream, as_generator

UNIFORM_ZERO_REWARD = "uniform_zero_reward"
CSV_HEADER = ["traj", "step", "state", "action", "reward", "next_state"]


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    next_state: int


@dataclass
class Dataset:
    trajectories: list[list[Transition]]
    source_spec: object = field(default=None, compare=False)

    def __len__(self):
        return sum(len(t) for t in self.trajectories)

    def arrays(self):
        """``(states, actions, rewards, next_states)`` over all transitions."""
        flat = [tr for traj in self.trajectories for tr in traj]
        if not flat:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0), empty
        s, a, r, s2 = zip(*flat)
        return (np.array(s, dtype=np.int64), np.array(a, dtype=np.int64),
                np.array(r, dtype=float), np.array(s2, dtype=np.int64))


def next_state_sampler(transitions: np.ndarray):
    """Inverse-CDF lookup ``f(s, a, u) -> s'`` for ``u`` in [0, 1).

    Zero-probability successors occupy empty CDF intervals and are never
    returned; a ``u`` beyond the rounded CDF total maps to the last state
    with positive mass.
    """
    cdf = np.cumsum(transitions, axis=-1)
    last = transitions.shape[-1] - 1 - np.argmax(transitions[..., ::-1] > 0, axis=-1)

    def sample(s: int, a: int, u: float) -> int:
        nxt = int(np.searchsorted(cdf[s, a], u, side="right"))
        return min(nxt, int(last[s, a]))

    return sample


def generate_dataset(mdp: Mdp, n_trajectories: int, horizon: int, rng: RngStream | np.random.Generator,
                     source_spec=None) -> Dataset:
    """Uniform-random-policy trajectories from uniformly drawn start states."""
    if n_trajectories < 1 or horizon < 1:
        raise ValidationError("n_trajectories and horizon must be positive")
    gen = as_generator(rng)
    starts = gen.integers(mdp.n_states, size=n_trajectories)
    actions = gen.integers(mdp.n_actions, size=(n_trajectories, horizon))
    draws = gen.random((n_trajectories, horizon))
    step = next_state_sampler(mdp.transitions)
    R = mdp.rewards
    trajectories = []
    for i in range(n_trajectories):
        s = int(starts[i])
        traj = []
        for t in range(horizon):
            a = int(actions[i, t])
            s2 = step(s, a, draws[i, t])
            traj.append(Transition(s, a, float(R[s, a]), s2))
            s = s2
        trajectories.append(traj)
    return Dataset(trajectories, source_spec)


def estimate_model(dataset: Dataset, n_states: int, n_actions: int, discount: float,
                   fallback: str = UNIFORM_ZERO_REWARD) -> Mdp:
    """Empirical transition frequencies and mean rewards.

    Unvisited state-action pairs get a uniform successor row and zero reward.
    """
    if fallback != UNIFORM_ZERO_REWARD:
        raise ValidationError(f"unknown fallback {fallback!r}")
    s, a, r, s2 = dataset.arrays()
    if s.size and (s.max() >= n_states or s2.max() >= n_states or a.max() >= n_actions):
        raise ValidationError("dataset indices exceed the model dimensions")
    counts = np.zeros((n_states, n_actions, n_states))
    np.add.at(counts, (s, a, s2), 1.0)
    reward_sums = np.zeros((n_states, n_actions))
    np.add.at(reward_sums, (s, a), r)
    visits = counts.sum(axis=-1)
    seen = visits > 0
    T = np.full((n_states, n_actions, n_states), 1.0 / n_states)
    T[seen] = counts[seen] / visits[seen][:, None]
    R = np.zeros((n_states, n_actions))
    R[seen] = reward_sums[seen] / visits[seen]
    return Mdp(R, T, discount)


def estimate_model_per_sa(mdp: Mdp, n: int, rng: RngStream | np.random.Generator) -> Mdp:
    """Model from exactly ``n`` next-state samples per state-action; rewards known."""
    if n < 1:
        raise ValidationError("need at least one sample per state-action pair")
    counts = as_generator(rng).multinomial(n, mdp.transitions)
    return Mdp(mdp.rewards, counts / n, mdp.discount)


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for i, traj in enumerate(dataset.trajectories):
            for t, tr in enumerate(traj):
                out.writerow([i, t, tr.state, tr.action, f"{tr.reward:.17g}", tr.next_state])


def read_dataset_csv(path) -> Dataset:
    trajectories: dict[int, list[Transition]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValidationError(f"unexpected dataset header {reader.fieldnames}")
        for row in reader:
            trajectories.setdefault(int(row["traj"]), []).append(
                Transition(int(row["state"]), int(row["action"]), float(row["reward"]), int(row["next_state"]))
            )
    return Dataset([trajectories[k] for k in sorted(trajectories)])
