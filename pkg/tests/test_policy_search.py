import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planreg.estimation import estimate_model
from planreg.mdp import Mdp, ValidationError, scalar_value
from planreg.policy_search import (
    Episode,
    MlpPolicy,
    SweepConfig,
    baseline_loss,
    policy_forward,
    reinforce_step,
    run_hidden_sweep,
    simulate_episodes,
    surrogate_objective,
    sweep_problem,
    train_runs,
    write_sweep_csv,
)
from planreg.random_mdp import RandomMdpSpec, sample_mdp
from planreg.rng import RngStream

FD_STEP = 1e-5


def random_policy(h, S, A, seed, scale=1.0):
    gen = np.random.default_rng(seed)
    return MlpPolicy(gen.normal(0, scale, (h, S)), gen.normal(0, scale, h),
                     gen.normal(0, scale, (A, h)), gen.normal(0, scale, A))


def random_episode(policy, mdp, horizon, seed):
    draws = np.random.default_rng(seed).random((1, 1 + 2 * horizon))
    ep = simulate_episodes(mdp, policy.table()[None], horizon, draws)
    return Episode(ep.states[0], ep.actions[0], ep.rewards[0])


def test_zero_weights_uniform():
    zero = MlpPolicy(np.zeros((3, 4)), np.zeros(3), np.zeros((5, 3)), np.zeros(5))
    for s in range(4):
        np.testing.assert_allclose(policy_forward(zero, s), np.full(5, 0.2))


def test_output_bias_shift_invariance():
    pol = random_policy(4, 3, 3, 0)
    shifted = pol.copy()
    shifted.b2 += 7.5
    for s in range(3):
        np.testing.assert_allclose(policy_forward(pol, s), policy_forward(shifted, s), atol=1e-12)


def test_table_matches_forward():
    pol = random_policy(6, 5, 3, 1)
    table = pol.table()
    for s in range(5):
        np.testing.assert_allclose(table[s], policy_forward(pol, s), atol=1e-14)


def test_distributions_valid_for_random_parameters():
    for seed in range(1000):
        pol = random_policy(3, 4, 3, seed, scale=10.0 ** (seed % 5 - 2))
        table = pol.table()
        assert np.all(table >= 0)
        assert np.max(np.abs(table.sum(axis=1) - 1)) <= 1e-9


def test_init_ranges():
    pol = MlpPolicy.init(16, 9, 3, RngStream(0))
    assert np.all(np.abs(pol.w1) <= 1 / 3) and np.all(np.abs(pol.w2) <= 1 / 4)
    assert pol.hidden_units == 16


def test_zero_advantage_leaves_policy_unchanged():
    pol = random_policy(4, 3, 2, 2)
    ep = Episode(np.array([0, 1, 2]), np.array([1, 0, 1]), np.array([1.0, 0.5, 0.25]))
    gamma = 0.9
    returns = np.array([1.0 + 0.9 * 0.5 + 0.81 * 0.25, 0.5 + 0.9 * 0.25, 0.25])
    new, base = reinforce_step(pol, returns, ep, 0.1, gamma)
    for a, b in zip(new.params(), pol.params()):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(base, returns)


def _fd_gradient(f, params):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + FD_STEP
            up = f()
            p[idx] = old - FD_STEP
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * FD_STEP)
        grads.append(g)
    return np.concatenate([g.ravel() for g in grads])


def _rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b))


@pytest.mark.parametrize("seed", range(5))
def test_policy_gradient_matches_finite_differences(seed):
    mdp = sample_mdp(RandomMdpSpec(4, 3, 2, 0.9), RngStream(seed))
    pol = random_policy(5, 4, 3, seed, scale=0.7)
    baseline = np.random.default_rng(seed).normal(size=4)
    ep = random_episode(pol, mdp, 12, seed)
    step = 1e-3
    new, _ = reinforce_step(pol, baseline, ep, step, 0.9)
    analytic = np.concatenate([((a - b) / step).ravel() for a, b in zip(new.params(), pol.params())])
    work = pol.copy()
    numeric = _fd_gradient(lambda: surrogate_objective(work, baseline, ep, 0.9), work.params())
    assert _rel_error(analytic, numeric) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_baseline_update_matches_finite_differences(seed):
    mdp = sample_mdp(RandomMdpSpec(4, 2, 2, 0.9), RngStream(seed))
    pol = random_policy(3, 4, 2, seed)
    baseline = np.random.default_rng(seed + 10).normal(size=4)
    ep = random_episode(pol, mdp, 15, seed)
    beta = 1e-2
    _, new_base = reinforce_step(pol, baseline, ep, 0.1, 0.9, baseline_step=beta)
    analytic = (new_base - baseline) / beta
    work = baseline.copy()
    numeric = -_fd_gradient(lambda: baseline_loss(work, ep, 0.9), [work])
    assert _rel_error(analytic, numeric) < 1e-4


def test_bandit_converges():
    bandit = Mdp(np.array([[1.0, 0.0]]), np.ones((1, 2, 1)), 0.9)
    successes = 0
    for seed in range(10):
        config = SweepConfig((4,), runs=1, episodes_per_run=2000, episode_horizon=1, step_size=0.1,
                             baseline_step=None, seed=seed)
        pol = train_runs(bandit, 4, config)[0]
        successes += policy_forward(pol, 0)[0] > 0.95
    assert successes >= 9


def _monte_carlo_value(mdp, table, episodes, horizon, seed):
    gen = np.random.default_rng(seed)
    S, A = table.shape
    s = gen.integers(S, size=episodes)
    act_cdf, nxt_cdf = np.cumsum(table, axis=1), np.cumsum(mdp.transitions, axis=2)
    total = np.zeros(episodes)
    for t in range(horizon):
        a = np.minimum((act_cdf[s] <= gen.random(episodes)[:, None]).sum(axis=1), A - 1)
        total += mdp.discount ** t * mdp.rewards[s, a]
        s = np.minimum((nxt_cdf[s, a] <= gen.random(episodes)[:, None]).sum(axis=1), S - 1)
    return total.mean(), total.std(ddof=1) / np.sqrt(episodes)


def test_exact_value_matches_monte_carlo():
    spec = RandomMdpSpec(6, 3, 3, 0.9)
    mdp = sample_mdp(spec, RngStream(1))
    table = random_policy(4, 6, 3, 3).table()
    mean, se = _monte_carlo_value(mdp, table, 100_000, 250, 0)
    assert abs(scalar_value(mdp, table) - mean) < 3 * se


def test_large_dataset_value_gap_small():
    true_mdp, data = sweep_problem(3, trajectories=10_000)
    config = SweepConfig((1, 10), runs=3, episodes_per_run=100, seed=3)
    rows = run_hidden_sweep(true_mdp, data, config)
    for row in rows:
        assert row.value_on_model - row.value_on_true < 0.02 * true_mdp.r_max / (1 - true_mdp.discount)


def test_sweep_is_thread_independent(tmp_path):
    true_mdp, data = sweep_problem(0)
    config = SweepConfig((1, 3, 8), runs=3, episodes_per_run=40, seed=1)
    one = run_hidden_sweep(true_mdp, data, config, threads=1)
    two = run_hidden_sweep(true_mdp, data, config, threads=2)
    assert one == two
    write_sweep_csv(one, tmp_path / "s.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "hidden_units,value_on_model,vm_ci_low,vm_ci_high,value_on_true,vt_ci_low,vt_ci_high,runs"


def test_training_reads_model_only():
    true_mdp, data = sweep_problem(0)
    model = estimate_model(data, 20, 4, 0.95)
    config = SweepConfig((2,), runs=2, episodes_per_run=20, seed=0)
    a = train_runs(model, 2, config)
    b = train_runs(model, 2, config)
    for pa, pb in zip(a, b):
        for x, y in zip(pa.params(), pb.params()):
            np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("kw", [dict(hidden_list=()), dict(hidden_list=(0,)), dict(runs=0),
                                dict(step_size=0.0), dict(episode_horizon=0)])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        SweepConfig(**kw)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(1, 4), st.floats(0.01, 20.0), st.integers(0, 2**32))
def test_forward_valid_distribution(h, S, A, scale, seed):
    table = random_policy(h, S, A, seed, scale).table()
    assert np.all(table >= 0) and np.max(np.abs(table.sum(axis=1) - 1)) <= 1e-9
