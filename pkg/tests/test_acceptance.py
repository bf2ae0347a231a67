"""Full-budget learning checks. Deselected by default, run with `pytest -m slow`."""

import numpy as np
import pytest

from ccm.harness import ExperimentConfig, compare, noise_regime, relative_degradation, run_eval, run_train
from ccm.nn import A2cOptimizers, CategoricalHead, FeedforwardNet, SgdMomentum, Trajectory, a2c_update

pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2, 3, 4]


def test_bandit_converges():
    rng = np.random.default_rng(0)
    policy = FeedforwardNet([1, 2], rng=rng)
    value = FeedforwardNet([1, 1], rng=rng)
    optimizers = A2cOptimizers(SgdMomentum(policy, lr=0.05), SgdMomentum(value, lr=0.05))
    head = CategoricalHead()
    state = np.ones(1)
    for _ in range(2000):
        trajectory = Trajectory(gamma=0.9)
        action, logp = head.sample(policy.forward(state), rng)
        trajectory.append(state, action, float(action == 0), log_prob=logp, done=True)
        a2c_update(trajectory, policy, value, optimizers, head)
    assert head.probs(policy.forward(state))[0] > 0.95


def train_both(scenario, temp_dir, workers=5):
    reports = {}
    for agent in ("ccm", "flat"):
        config = ExperimentConfig.from_dict({"scenario": scenario, "agent": agent, "seeds": SEEDS, "workers": workers})
        reports[agent] = run_train(config, f"{temp_dir}/{agent}")
    return reports


def test_env1_learning(temp_dir):
    reports = train_both("env1", temp_dir)
    ccm = reports["ccm"]
    assert ccm.mean("reward") >= 20.0
    for seed, reward in ccm.values("reward").items():
        assert reward >= 3.0 * ccm.per_seed[seed]["random_reward"]
    table = compare(ccm, reports["flat"]).set_index("metric")
    assert table.loc["reward", "wins_a"] >= 4


def test_env3_noise_robustness(temp_dir):
    train_both("env3", temp_dir)
    noise = noise_regime("random_large")
    degradation = {}
    for agent in ("ccm", "flat"):
        clean = run_eval(f"{temp_dir}/{agent}", episodes=20)
        noisy = run_eval(f"{temp_dir}/{agent}", episodes=20, noise=noise)
        degradation[agent] = relative_degradation(clean, noisy)
    better = sum(degradation["ccm"][seed] < degradation["flat"][seed] for seed in degradation["ccm"] if seed in degradation["flat"])
    assert better >= 4


def test_glucose_time_in_range(temp_dir):
    config = ExperimentConfig.from_dict({"scenario": "glucose", "seeds": [0]})
    run_train(config, f"{temp_dir}/run")
    single = run_eval(f"{temp_dir}/run", episodes=1)
    assert single.mean("tir") >= 0.7
    cohort = run_eval(f"{temp_dir}/run/checkpoints/seed_0.npz", episodes=1, cohort_size=30)
    metrics = cohort.per_seed[0]
    assert metrics["cohort_tir"] >= 0.5
    assert metrics["cohort_tir_adult"] >= metrics["cohort_tir_child"]
