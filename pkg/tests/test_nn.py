import json
import os

import numpy as np
import pytest
from scipy.stats import norm

from ccm.nn import (
    A2cOptimizers,
    CategoricalHead,
    Checkpoint,
    CheckpointError,
    DiagonalGaussianHead,
    FeedforwardNet,
    NumericsError,
    RecurrentCell,
    RunningMeanStd,
    SgdMomentum,
    ShapeError,
    Trajectory,
    a2c_update,
    backward,
    discounted_returns,
    finite_difference_grads,
    forward,
    load_checkpoint,
    relative_error,
    save_checkpoint,
)
from ccm.nn.const import CHECKPOINT_META_KEY


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_feedforward_gradients_match_finite_differences(rng):
    net = FeedforwardNet([3, 5, 4, 2], rng=rng)
    x = rng.normal(size=(6, 3))
    weights = rng.normal(size=(6, 2))

    def loss() -> float:
        return float((weights * net.forward(x)).sum())

    forward(net, x)
    analytic = backward(net, weights)
    numerical = finite_difference_grads(net, loss)
    for name in net.params:
        assert relative_error(analytic[name], numerical[name]) < 1e-4, name


def test_feedforward_input_gradient(rng):
    net = FeedforwardNet([2, 3, 1], rng=rng)
    x = np.array([0.3, -0.7])
    net.forward(x)
    dx = net.backward(np.array([1.0]))
    step = 1e-5
    for i in range(2):
        up, down = x.copy(), x.copy()
        up[i] += step
        down[i] -= step
        expected = (net.forward(up)[0] - net.forward(down)[0]) / (2 * step)
        assert dx[i] == pytest.approx(expected, rel=1e-5, abs=1e-8)


def test_feedforward_rejects_bad_shapes(rng):
    with pytest.raises(ShapeError):
        FeedforwardNet([3], rng=rng)
    net = FeedforwardNet([3, 2], rng=rng)
    with pytest.raises(ShapeError):
        net.forward(np.zeros(4))


def test_recurrent_gradients_match_finite_differences(rng):
    cell = RecurrentCell(input_size=3, hidden_size=4, output_size=1, rng=rng)
    xs = rng.normal(size=(5, 3))
    weights = rng.normal(size=(5, 1))

    def loss() -> float:
        return float((weights * cell.forward_sequence(xs)).sum())

    cell.zero_grad()
    cell.forward_sequence(xs)
    cell.backward_sequence(weights)
    analytic = {name: grad.copy() for name, grad in cell.grads.items()}
    numerical = finite_difference_grads(cell, loss)
    for name in cell.params:
        assert relative_error(analytic[name], numerical[name]) < 1e-4, name


def test_recurrent_online_step_matches_window(rng):
    cell = RecurrentCell(input_size=2, hidden_size=3, rng=rng)
    xs = rng.normal(size=(4, 2))
    window = cell.forward_sequence(xs)
    cell.reset()
    online = np.array([cell.step(x) for x in xs])
    assert np.allclose(online, window)
    assert np.allclose(cell.h, cell.last_hidden)


def test_categorical_head(rng):
    head = CategoricalHead()
    logits = np.array([0.1, 2.0, -1.0])
    action, logp = head.sample(logits, rng, deterministic=True)
    assert action == 1
    assert logp == pytest.approx(np.log(head.probs(logits)[1]))
    assert head.probs(logits).sum() == pytest.approx(1.0)

    grad = head.grad_log_prob(logits, 2)[0]
    step = 1e-6
    for i in range(3):
        up, down = logits.copy(), logits.copy()
        up[i] += step
        down[i] -= step
        expected = (head.log_prob(up, 2)[0] - head.log_prob(down, 2)[0]) / (2 * step)
        assert grad[i] == pytest.approx(expected, abs=1e-6)


def test_categorical_entropy_is_maximal_when_uniform():
    head = CategoricalHead()
    assert head.entropy(np.zeros(4))[0] == pytest.approx(np.log(4))
    assert head.entropy(np.array([5.0, 0.0, 0.0, 0.0]))[0] < np.log(4)


def test_gaussian_head_log_prob(rng):
    head = DiagonalGaussianHead(dim=2, init_log_std=-0.3)
    mean = np.array([0.5, -1.0])
    action = np.array([0.2, -0.4])
    expected = norm.logpdf(action, loc=mean, scale=np.exp(-0.3)).sum()
    assert head.log_prob(mean, action)[0] == pytest.approx(expected)
    sampled, _ = head.sample(mean, rng, deterministic=True)
    assert np.array_equal(sampled, mean)


def test_gaussian_head_clamps_log_std():
    head = DiagonalGaussianHead(dim=1)
    head.params["log_std"][...] = 50.0
    head.clamp()
    assert head.log_std[0] == 2.0
    assert DiagonalGaussianHead(dim=1, init_log_std=-20.0).log_std[0] == -5.0


@pytest.mark.parametrize(
    "rewards, dones, bootstrap, expected",
    [
        ([1.0, 1.0, 1.0], [False, False, False], 0.0, [1.75, 1.5, 1.0]),
        ([1.0, 1.0, 1.0], [False, True, False], 0.0, [1.5, 1.0, 1.0]),
        ([0.0, 0.0], [False, False], 4.0, [1.0, 2.0]),
    ],
)
def test_discounted_returns(rewards, dones, bootstrap, expected):
    assert np.allclose(discounted_returns(rewards, dones, 0.5, bootstrap), expected)


def test_trajectory_rejects_bad_discount():
    with pytest.raises(ValueError):
        Trajectory(gamma=0.0)


def test_a2c_learns_a_bandit(rng):
    policy = FeedforwardNet([1, 2], rng=rng)
    value = FeedforwardNet([1, 1], rng=rng)
    optimizers = A2cOptimizers(SgdMomentum(policy, lr=0.05), SgdMomentum(value, lr=0.05))
    head = CategoricalHead()
    state = np.ones(1)
    for _ in range(300):
        trajectory = Trajectory(gamma=0.9)
        for _ in range(8):
            action, logp = head.sample(policy.forward(state), rng)
            trajectory.append(state, action, float(action == 1), log_prob=logp, done=True)
        a2c_update(trajectory, policy, value, optimizers, head)
    assert head.probs(policy.forward(state))[1] > 0.9


def test_a2c_moves_gaussian_mean_towards_reward(rng):
    policy = FeedforwardNet([1, 1], rng=rng, output_scale=0.1)
    value = FeedforwardNet([1, 1], rng=rng)
    head = DiagonalGaussianHead(dim=1)
    optimizers = A2cOptimizers(
        SgdMomentum([policy, head], lr=0.01, max_grad_norm=1.0), SgdMomentum(value, lr=0.01, max_grad_norm=1.0)
    )
    state = np.ones(1)
    for _ in range(400):
        trajectory = Trajectory(gamma=0.9)
        for _ in range(16):
            action, logp = head.sample(policy.forward(state), rng)
            trajectory.append(state, action, -float((action[0] - 1.0) ** 2), log_prob=logp, done=True)
        a2c_update(trajectory, policy, value, optimizers, head)
    assert abs(policy.forward(state)[0] - 1.0) < 0.25


def test_a2c_skips_non_finite_update(rng):
    policy = FeedforwardNet([1, 2], rng=rng)
    value = FeedforwardNet([1, 1], rng=rng)
    optimizers = A2cOptimizers(SgdMomentum(policy, lr=0.1), SgdMomentum(value, lr=0.1))
    before = policy.state_dict()
    trajectory = Trajectory()
    trajectory.append(np.ones(1), 0, float("nan"), done=True)
    with pytest.raises(NumericsError):
        a2c_update(trajectory, policy, value, optimizers)
    assert all(np.array_equal(before[name], policy.params[name]) for name in before)


def test_a2c_keeps_policy_when_critic_update_overflows(rng):
    policy = FeedforwardNet([1, 2], rng=rng)
    value = FeedforwardNet([1, 1], rng=rng)
    optimizers = A2cOptimizers(SgdMomentum(policy, lr=0.1), SgdMomentum(value, lr=1e308))
    params, velocity = policy.state_dict(), optimizers.policy.state_dict()
    trajectory = Trajectory()
    trajectory.append(np.ones(1), 1, 5.0, done=True)
    with pytest.raises(NumericsError):
        a2c_update(trajectory, policy, value, optimizers)
    assert all(np.array_equal(params[name], policy.params[name]) for name in params)
    assert all(np.array_equal(velocity[name], buffer) for name, buffer in optimizers.policy.state_dict().items())


def test_sgd_propose_leaves_parameters_alone(rng):
    net = FeedforwardNet([1, 1], rng=rng)
    optimizer = SgdMomentum(net, lr=1.0, momentum=0.0)
    before = net.state_dict()
    net.grads["W0"][...] = 2.0
    pending = optimizer.propose()
    assert np.array_equal(net.params["W0"], before["W0"])
    assert optimizer.commit(pending) == pytest.approx(2.0)
    assert net.params["W0"][0, 0] == pytest.approx(before["W0"][0, 0] - 2.0)


def test_a2c_rejects_empty_trajectory(rng):
    policy = FeedforwardNet([1, 2], rng=rng)
    value = FeedforwardNet([1, 1], rng=rng)
    optimizers = A2cOptimizers(SgdMomentum(policy, lr=0.1), SgdMomentum(value, lr=0.1))
    with pytest.raises(ShapeError):
        a2c_update(Trajectory(), policy, value, optimizers)


def test_sgd_clips_and_reports_norm(rng):
    net = FeedforwardNet([1, 1], rng=rng)
    optimizer = SgdMomentum(net, lr=1.0, momentum=0.0, max_grad_norm=1.0)
    before = net.state_dict()
    net.grads["W0"][...] = 3.0
    net.grads["b0"][...] = 4.0
    assert optimizer.step() == pytest.approx(5.0)
    assert net.params["W0"][0, 0] == pytest.approx(before["W0"][0, 0] - 0.6)
    assert net.params["b0"][0] == pytest.approx(before["b0"][0] - 0.8)


def test_sgd_refuses_non_finite_gradients(rng):
    net = FeedforwardNet([1, 1], rng=rng)
    optimizer = SgdMomentum(net, lr=0.1)
    before = net.state_dict()
    net.grads["W0"][...] = np.inf
    with pytest.raises(NumericsError):
        optimizer.step()
    assert np.array_equal(net.params["W0"], before["W0"])


def test_sgd_validates_arguments(rng):
    net = FeedforwardNet([1, 1], rng=rng)
    with pytest.raises(ValueError):
        SgdMomentum(net, lr=0.0)
    with pytest.raises(ValueError):
        SgdMomentum(net, lr=0.1, momentum=1.0)


def test_running_mean_std(rng):
    stats = RunningMeanStd()
    chunks = [rng.normal(3.0, 2.0, size=50) for _ in range(4)]
    for chunk in chunks:
        stats.update(chunk)
    values = np.concatenate(chunks)
    assert stats.mean == pytest.approx(values.mean(), rel=1e-4)
    assert stats.std == pytest.approx(values.std(), rel=1e-3)
    assert np.allclose(stats.scale(values), values / stats.std)


def test_checkpoint_round_trip(rng, temp_dir):
    net = FeedforwardNet([2, 3, 1], rng=rng)
    stats = RunningMeanStd()
    stats.update([1.0, 2.0, 3.0])
    checkpoint = Checkpoint(meta={"seed": 3})
    checkpoint.add("nets", "critic", net)
    checkpoint.add("stats", "reward", stats)
    path = os.path.join(temp_dir, "ckpt.npz")
    save_checkpoint(path, checkpoint)

    loaded = load_checkpoint(path)
    assert loaded.meta["seed"] == 3
    assert loaded.names("nets") == ["critic"]
    other = FeedforwardNet([2, 3, 1], rng=np.random.default_rng(99))
    loaded.restore("nets", "critic", other)
    x = np.array([0.2, -0.1])
    assert np.array_equal(other.forward(x), net.forward(x))


def test_checkpoint_shape_mismatch(rng):
    checkpoint = Checkpoint()
    checkpoint.add("nets", "critic", FeedforwardNet([2, 3, 1], rng=rng))
    with pytest.raises(CheckpointError):
        checkpoint.restore("nets", "critic", FeedforwardNet([2, 4, 1], rng=rng))
    with pytest.raises(CheckpointError):
        checkpoint.restore("nets", "actor", FeedforwardNet([2, 3, 1], rng=rng))


def test_checkpoint_version_is_checked(temp_dir):
    path = os.path.join(temp_dir, "old.npz")
    with open(path, "wb") as f:
        np.savez(f, **{CHECKPOINT_META_KEY: np.array(json.dumps({"version": 0}))})
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_unreadable_checkpoint(temp_dir):
    path = os.path.join(temp_dir, "junk.npz")
    with open(path, "w") as f:
        f.write("not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
