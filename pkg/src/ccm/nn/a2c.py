from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np

from .const import DEFAULT_ENTROPY_COEF
from .exceptions import NumericsError, ShapeError
from .heads import CategoricalHead, DiagonalGaussianHead, PolicyHead
from .nets import FeedforwardNet
from .optim import SgdMomentum

logger = logging.getLogger(__name__)

__all__ = ("Trajectory", "A2cOptimizers", "A2cResult", "discounted_returns", "a2c_update")


@dataclass
class Trajectory:
    """On-policy rollout: one row per transition."""

    gamma: float = 0.99
    states: list[np.ndarray] = field(default_factory=list)
    actions: list[Any] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    dones: list[bool] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def append(self, state: np.ndarray, action: Any, reward: float, value: float = 0.0, log_prob: float = 0.0, done: bool = False) -> None:
        self.states.append(np.asarray(state, dtype=float))
        self.actions.append(action)
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.log_probs.append(float(log_prob))
        self.dones.append(bool(done))

    def __len__(self) -> int:
        return len(self.rewards)

    def clear(self) -> None:
        for rows in (self.states, self.actions, self.rewards, self.values, self.log_probs, self.dones):
            rows.clear()

    def returns(self, bootstrap: float = 0.0) -> np.ndarray:
        return discounted_returns(self.rewards, self.dones, self.gamma, bootstrap)


class A2cOptimizers(NamedTuple):
    policy: SgdMomentum
    value: SgdMomentum


class A2cResult(NamedTuple):
    policy_loss: float
    value_loss: float
    entropy: float
    advantages: np.ndarray


def discounted_returns(rewards: Any, dones: Any, gamma: float, bootstrap: float = 0.0) -> np.ndarray:
    """G_t = r_t + gamma * G_{t+1}, restarting after every done flag; `bootstrap` seeds the tail."""
    rewards = np.asarray(rewards, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    out = np.empty_like(rewards)
    running = float(bootstrap)
    for t in reversed(range(len(rewards))):
        if dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def a2c_update(
    trajectory: Trajectory,
    policy_net: FeedforwardNet,
    value_net: FeedforwardNet,
    optimizers: A2cOptimizers,
    head: Optional[PolicyHead] = None,
    entropy_coef: float = DEFAULT_ENTROPY_COEF,
    bootstrap: float = 0.0,
) -> A2cResult:
    """One advantage actor-critic step over a whole trajectory.

    The policy minimizes -mean(log pi(a|s) * A) - entropy_coef * mean(H), the critic minimizes
    0.5 * mean(A^2), with A = discounted return - V(s) and V recomputed from the current critic.

    Args:
        trajectory (Trajectory): Non-empty rollout; its `gamma` is the discount.
        policy_net (FeedforwardNet): Outputs logits (categorical head) or the action mean (gaussian head).
        value_net (FeedforwardNet): Scalar critic.
        optimizers (A2cOptimizers): Policy-side optimizer (covering a gaussian head too) and critic optimizer.
        head (Optional[PolicyHead]): Defaults to a categorical head.
        entropy_coef (float): Weight of the entropy bonus. Defaults to 0.01.
        bootstrap (float): Value used past the last transition when it is not terminal. Defaults to 0.

    Returns:
        A2cResult: Losses, mean entropy and the advantages used.

    Raises:
        NumericsError: If a loss or an updated parameter is not finite. Nothing is applied then.
    """
    if not len(trajectory):
        raise ShapeError("cannot update from an empty trajectory")
    head = head or CategoricalHead()
    states = np.stack(trajectory.states)
    n = len(trajectory)
    returns = trajectory.returns(bootstrap)
    values = value_net.forward(states)[:, 0]
    advantages = returns - values
    out = policy_net.forward(states)

    if isinstance(head, DiagonalGaussianHead):
        actions = np.asarray(trajectory.actions, dtype=float).reshape(n, -1)
        logp = head.log_prob(out, actions)
        entropy = head.entropy(out)
        d_mean, d_log_std = head.grad_log_prob(out, actions)
        d_out = -(advantages[:, None] * d_mean) / n
        d_head = -(advantages[:, None] * d_log_std).sum(axis=0) / n - entropy_coef * np.ones(head.dim)
    else:
        actions = np.asarray(trajectory.actions, dtype=int)
        logp = head.log_prob(out, actions)
        entropy = head.entropy(out)
        d_out = -(advantages[:, None] * head.grad_log_prob(out, actions)) / n - entropy_coef * head.grad_entropy(out) / n
        d_head = None

    policy_loss = float(-(logp * advantages).mean() - entropy_coef * entropy.mean())
    value_loss = float(0.5 * (advantages**2).mean())
    if not (np.isfinite(policy_loss) and np.isfinite(value_loss)):
        logger.warning(f"Skipping update: policy loss {policy_loss}, value loss {value_loss}")
        raise NumericsError

    optimizers.policy.zero_grad()
    optimizers.value.zero_grad()
    policy_net.backward(d_out)
    if d_head is not None and isinstance(head, DiagonalGaussianHead):
        head.grads["log_std"] += d_head
    value_net.backward((-advantages / n)[:, None])
    # both candidates are validated before either is written
    policy_step = optimizers.policy.propose()
    value_step = optimizers.value.propose()
    optimizers.policy.commit(policy_step)
    optimizers.value.commit(value_step)
    if isinstance(head, DiagonalGaussianHead):
        head.clamp()
    return A2cResult(policy_loss, value_loss, float(entropy.mean()), advantages)
