"""Random sparse-support MDPs and their flat text format.

Each transition row puts mass on ``branching`` distinct successor states
chosen uniformly at random; the masses are independent Uniform[0, 1) draws,
normalized. Rewards are independent Uniform[reward_low, reward_high).

Text format (one record per line, reals printed with 17 significant digits)::

    mdp <n_states> <n_actions> <discount>
    R <s> <a> <reward>          for every (s, a)
    T <s> <a> <s'> <prob>       for every non-zero transition entry
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from planreg.mdp import Mdp, ValidationError
from planreg.rng import RngStream, as_generator


@dataclass(frozen=True)
class RandomMdpSpec:
    n_states: int = 10
    n_actions: int = 2
    branching: int = 5
    discount: float = 0.99
    reward_low: float = 0.0
    reward_high: float = 1.0

    def __post_init__(self):
        if min(self.n_states, self.n_actions, self.branching) < 1:
            raise ValidationError("n_states, n_actions and branching must all be >= 1")
        if self.branching > self.n_states:
            raise ValidationError(f"branching {self.branching} exceeds n_states {self.n_states}")
        if self.reward_low > self.reward_high:
            raise ValidationError("reward_low must not exceed reward_high")
        if self.reward_low < 0:
            raise ValidationError("rewards must be non-negative")
        if not 0.0 <= self.discount < 1.0:
            raise ValidationError("discount must lie in [0, 1)")


def draw_transitions(gen: np.random.Generator, spec: RandomMdpSpec, batch: tuple[int, ...] = ()) -> np.ndarray:
    """Transition tensors of shape ``batch + (S, A, S)``.

    The support of each row is the ``branching`` smallest of ``S`` i.i.d.
    uniform sort keys, which is a uniformly random subset of that size.
    """
    S, A, k = spec.n_states, spec.n_actions, spec.branching
    shape = batch + (S, A)
    keys = gen.random(shape + (S,))
    support = np.argsort(keys, axis=-1, kind="stable")[..., :k]
    weights = gen.random(shape + (k,))
    # All-zero draws have probability 2**-53k; redraw rather than divide by zero.
    dead = weights.sum(axis=-1) == 0.0
    while dead.any():
        weights[dead] = gen.random((int(dead.sum()), k))
        dead = weights.sum(axis=-1) == 0.0
    T = np.zeros(shape + (S,))
    np.put_along_axis(T, support, weights / weights.sum(axis=-1, keepdims=True), axis=-1)
    return T


def sample_mdp(spec: RandomMdpSpec, rng: RngStream | np.random.Generator) -> Mdp:
    gen = as_generator(rng)
    T = draw_transitions(gen, spec)
    R = gen.uniform(spec.reward_low, spec.reward_high, size=(spec.n_states, spec.n_actions))
    return Mdp(R, T, spec.discount)


def sample_transitions_fixed_reward(reward_table, spec: RandomMdpSpec, rng: RngStream | np.random.Generator) -> Mdp:
    """Same transition recipe as :func:`sample_mdp`, rewards copied in."""
    reward_table = np.asarray(reward_table, dtype=float)
    if reward_table.shape != (spec.n_states, spec.n_actions):
        raise ValidationError(
            f"reward table shape {reward_table.shape} != {(spec.n_states, spec.n_actions)}"
        )
    return Mdp(reward_table, draw_transitions(as_generator(rng), spec), spec.discount)


def sample_reward_table(spec: RandomMdpSpec, rng: RngStream | np.random.Generator) -> np.ndarray:
    return as_generator(rng).uniform(spec.reward_low, spec.reward_high, size=(spec.n_states, spec.n_actions))


def format_mdp(mdp: Mdp) -> str:
    lines = [f"mdp {mdp.n_states} {mdp.n_actions} {mdp.discount:.17g}"]
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            lines.append(f"R {s} {a} {mdp.rewards[s, a]:.17g}")
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            for t in np.flatnonzero(mdp.transitions[s, a]):
                lines.append(f"T {s} {a} {t} {mdp.transitions[s, a, t]:.17g}")
    return "\n".join(lines) + "\n"


def parse_mdp(text: str) -> Mdp:
    records = [line.split() for line in text.splitlines() if line.strip()]
    if not records or records[0][0] != "mdp" or len(records[0]) != 4:
        raise ValidationError("missing 'mdp n_states n_actions discount' header")
    S, A, discount = int(records[0][1]), int(records[0][2]), float(records[0][3])
    R = np.zeros((S, A))
    T = np.zeros((S, A, S))
    for rec in records[1:]:
        if rec[0] == "R" and len(rec) == 4:
            R[int(rec[1]), int(rec[2])] = float(rec[3])
        elif rec[0] == "T" and len(rec) == 5:
            T[int(rec[1]), int(rec[2]), int(rec[3])] = float(rec[4])
        else:
            raise ValidationError(f"malformed record: {' '.join(rec)}")
    return Mdp(R, T, discount)


def write_mdp(mdp: Mdp, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_mdp(mdp))


def read_mdp(path) -> Mdp:
    with open(path) as fh:
        return parse_mdp(fh.read())
