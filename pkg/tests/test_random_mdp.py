import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planreg.mdp import ValidationError
from planreg.random_mdp import (
    RandomMdpSpec,
    draw_transitions,
    format_mdp,
    parse_mdp,
    read_mdp,
    sample_mdp,
    sample_reward_table,
    sample_transitions_fixed_reward,
    write_mdp,
)
from planreg.rng import RngStream

# Upper 0.1% point of the chi-square distribution with 5 degrees of freedom.
CHI2_5DF_P001 = 20.515


def test_single_state_is_point_mass():
    mdp = sample_mdp(RandomMdpSpec(n_states=1, n_actions=3, branching=1), RngStream(0))
    np.testing.assert_array_equal(mdp.transitions, np.ones((1, 3, 1)))


def test_default_rows_have_five_successors():
    mdp = sample_mdp(RandomMdpSpec(), RngStream(3))
    assert np.all((mdp.transitions > 0).sum(axis=-1) == 5)
    assert np.max(np.abs(mdp.transitions.sum(axis=-1) - 1.0)) <= 1e-9


def test_same_stream_same_mdp():
    spec = RandomMdpSpec()
    assert sample_mdp(spec, RngStream(5, 2)) == sample_mdp(spec, RngStream(5, 2))
    assert sample_mdp(spec, RngStream(5, 2)) != sample_mdp(spec, RngStream(5, 3))


def test_fixed_reward_replays_sample_mdp_transitions():
    spec = RandomMdpSpec()
    rewards = np.arange(20, dtype=float).reshape(10, 2) / 20
    ref = sample_mdp(spec, RngStream(9))
    got = sample_transitions_fixed_reward(rewards, spec, RngStream(9))
    np.testing.assert_array_equal(got.transitions, ref.transitions)
    np.testing.assert_array_equal(got.rewards, rewards)
    with pytest.raises(ValidationError):
        sample_transitions_fixed_reward(np.zeros((3, 2)), spec, RngStream(9))


def test_reward_mean():
    rewards = sample_reward_table(RandomMdpSpec(n_states=100, n_actions=100), RngStream(1))
    assert abs(rewards.mean() - 0.5) < 0.01


def test_support_subsets_are_uniform():
    spec = RandomMdpSpec(n_states=4, n_actions=1, branching=2)
    T = draw_transitions(RngStream(2024).generator(), spec, batch=(10_000,))
    support = T[:, 0, 0] > 0
    subsets = list(itertools.combinations(range(4), 2))
    counts = np.array([np.sum(support[:, i] & support[:, j]) for i, j in subsets])
    assert counts.sum() == 10_000
    expected = 10_000 / len(subsets)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_5DF_P001


@pytest.mark.parametrize("kwargs", [
    dict(n_states=0), dict(branching=11), dict(reward_low=2.0, reward_high=1.0),
    dict(discount=1.0), dict(reward_low=-1.0),
])
def test_invalid_spec(kwargs):
    with pytest.raises(ValidationError):
        RandomMdpSpec(**kwargs)


def test_text_round_trip(tmp_path):
    mdp = sample_mdp(RandomMdpSpec(n_states=6, n_actions=3, branching=2), RngStream(8))
    assert parse_mdp(format_mdp(mdp)) == mdp
    path = tmp_path / "m.txt"
    write_mdp(mdp, path)
    assert read_mdp(path) == mdp
    with pytest.raises(ValidationError):
        parse_mdp("mdp 1 1 0.5\nX 0 0 1\n")


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 4), st.data())
def test_rows_have_exact_branching(n_states, n_actions, data):
    k = data.draw(st.integers(1, n_states))
    seed = data.draw(st.integers(0, 2**63))
    mdp = sample_mdp(RandomMdpSpec(n_states, n_actions, k), RngStream(seed))
    assert np.all((mdp.transitions > 0).sum(axis=-1) == k)
    assert np.max(np.abs(mdp.transitions.sum(axis=-1) - 1.0)) <= 1e-9
