from __future__ import annotations

import logging
from typing import Any, Optional

import numpy as np

from ccm._enums import AgentKind, LogLevel
from ccm.base import Agent, EpisodeRow
from ccm.graph import CausalGraphDynamic
from ccm.nn import (
    A2cOptimizers,
    Checkpoint,
    CheckpointError,
    DiagonalGaussianHead,
    FeedforwardNet,
    NumericsError,
    RunningMeanStd,
    SgdMomentum,
    Trajectory,
    a2c_update,
)

from ._utils import NodeScaler, ViewCode, box_reward, encode
from .base import GoalBox, HyperParams

logger = logging.getLogger(__name__)

__all__ = ("FlatAgent", "RandomAgent")


class FlatAgent(Agent):
    """Non-hierarchical actor-critic driving every modifiable node with a multivariate gaussian head.

    It shares the encoding, the box reward and the update rule of the two-level agent, updating
    every `C` steps.
    """

    kind = AgentKind.flat

    def __init__(
        self,
        graph: CausalGraphDynamic,
        goal: GoalBox,
        hp: Optional[HyperParams] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        super().__init__()
        self.graph = graph
        self.goal = goal
        self.hp = hp or HyperParams()
        self.rng = rng or np.random.default_rng(0)
        self.scaler = NodeScaler(graph)
        self.sources = tuple(graph.modifiable)
        n = len(graph.node_ids)
        self.code = ViewCode.build(self.scaler, n, graph.node_ids, self.sources, graph.targets)
        self.policy = FeedforwardNet((4 * n, *self.hp.hidden, len(self.sources)), self.rng, output_scale=0.01)
        self.value = FeedforwardNet((4 * n, *self.hp.hidden, 1), self.rng)
        self.head = DiagonalGaussianHead(len(self.sources), self.hp.init_log_std)
        self.optimizers = A2cOptimizers(
            policy=SgdMomentum([self.policy, self.head], self.hp.policy_lr, self.hp.momentum, self.hp.max_grad_norm),
            value=SgdMomentum(self.value, self.hp.value_lr, self.hp.momentum, self.hp.max_grad_norm),
        )
        self.rewards = RunningMeanStd()
        self.total_steps = 0
        self._reset_episode()

    def _reset_episode(self) -> None:
        self.t = 0
        self._trajectory = Trajectory(gamma=self.hp.gamma)
        self._raw: list[float] = []
        self._pending: Optional[tuple[np.ndarray, np.ndarray]] = None
        self._losses: list[tuple[float, float]] = []

    def begin_episode(self, state: np.ndarray) -> None:
        self._reset_episode()

    def act(self, state: np.ndarray) -> dict[int, float]:
        x = encode(self.scaler, self.code, np.asarray(state, dtype=float), self.goal)
        action, _ = self.head.sample(self.policy(x), self.rng, deterministic=not self.training)
        self._pending = (x, action)
        return {node: self.scaler.to_value(node, action[i]) for i, node in enumerate(self.sources)}

    def observe(self, state: np.ndarray, done: bool) -> list[EpisodeRow]:
        if self._pending is None:
            raise RuntimeError("observe called without a preceding act")
        state = np.asarray(state, dtype=float)
        x, action = self._pending
        self._pending = None
        self.t += 1
        self.total_steps += 1
        targets = state[self.code.target_index]
        reward = box_reward(targets, self.goal, self.hp.omega, self.hp.upsilon)
        self._trajectory.append(x, action, reward)
        self._raw.append(reward)
        if self.training and (len(self._trajectory) >= self.hp.C or done):
            self._update(state, done)
        return [
            EpisodeRow(
                level=LogLevel.low,
                t=self.t,
                view=0,
                goal_center=float(self.goal.center[0]),
                action=self.scaler.to_value(self.sources[0], action[0]),
                reward=reward,
                target_value=float(targets[0]),
            )
        ]

    def _update(self, state: np.ndarray, done: bool) -> None:
        trajectory = self._trajectory
        if self.hp.normalize_rewards:
            self.rewards.update(self._raw)
            trajectory.rewards[:] = [float(self.rewards.scale(r)) for r in self._raw]
        bootstrap = 0.0 if done else float(self.value(encode(self.scaler, self.code, state, self.goal))[0])
        try:
            result = a2c_update(
                trajectory,
                self.policy,
                self.value,
                self.optimizers,
                head=self.head,
                entropy_coef=self.hp.entropy_coef,
                bootstrap=bootstrap,
            )
            self._losses.append((result.policy_loss, result.value_loss))
        except NumericsError as e:
            logger.warning(f"Flat update skipped at step {self.t}: {e}")
        trajectory.clear()
        self._raw.clear()

    def end_episode(self) -> list[EpisodeRow]:
        if not self.training:
            return []
        losses = np.array(self._losses) if self._losses else np.full((1, 2), np.nan)
        return [
            EpisodeRow(
                level=LogLevel.update,
                t=self.t,
                view=0,
                loss_policy=float(losses[:, 0].mean()),
                loss_value=float(losses[:, 1].mean()),
            )
        ]

    def interface(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "nodes": list(self.graph.node_ids),
            "modifiable": list(self.graph.modifiable),
            "targets": list(self.graph.targets),
            "edges": [list(edge) for edge in self.graph.edges],
            "hidden": list(self.hp.hidden),
        }

    def checkpoint(self) -> Checkpoint:
        ckpt = Checkpoint(meta={"interface": self.interface(), "hp": self.hp.to_dict(), "total_steps": self.total_steps})
        for name in ("policy", "value", "head"):
            ckpt.add("module", name, getattr(self, name))
        ckpt.add("optim", "policy", self.optimizers.policy)
        ckpt.add("optim", "value", self.optimizers.value)
        ckpt.add("norm", "rewards", self.rewards)
        return ckpt

    def load_checkpoint(self, checkpoint: Checkpoint) -> None:
        interface = checkpoint.meta.get("interface")
        if interface != self.interface():
            raise CheckpointError(f"checkpoint was written for {interface}, agent has {self.interface()}")
        for name in ("policy", "value", "head"):
            checkpoint.restore("module", name, getattr(self, name))
        checkpoint.restore("optim", "policy", self.optimizers.policy)
        checkpoint.restore("optim", "value", self.optimizers.value)
        checkpoint.restore("norm", "rewards", self.rewards)
        self.total_steps = int(checkpoint.meta.get("total_steps", 0))


class RandomAgent(Agent):
    """Uniform actions inside each modifiable node's bounds; never learns."""

    kind = AgentKind.random

    def __init__(
        self,
        graph: CausalGraphDynamic,
        goal: GoalBox,
        hp: Optional[HyperParams] = None,
        rng: Optional[np.random.Generator] = None,
        level: LogLevel = LogLevel.random,
    ) -> None:
        super().__init__()
        self.graph = graph
        self.goal = goal
        self.hp = hp or HyperParams()
        self.rng = rng or np.random.default_rng(0)
        self.level = LogLevel(level)
        self.sources = tuple(graph.modifiable)
        self._targets = np.array([graph.index(node) for node in graph.targets], dtype=int)
        self._last: dict[int, float] = {}
        self.t = 0

    def begin_episode(self, state: np.ndarray) -> None:
        self.t = 0

    def act(self, state: np.ndarray) -> dict[int, float]:
        self._last = {node: float(self.rng.uniform(*self.graph.spec(node).bounds)) for node in self.sources}
        return dict(self._last)

    def observe(self, state: np.ndarray, done: bool) -> list[EpisodeRow]:
        self.t += 1
        targets = np.asarray(state, dtype=float)[self._targets]
        return [
            EpisodeRow(
                level=self.level,
                t=self.t,
                view=0,
                goal_center=float(self.goal.center[0]),
                action=self._last[self.sources[0]],
                reward=box_reward(targets, self.goal, self.hp.omega, self.hp.upsilon),
                target_value=float(targets[0]),
            )
        ]

    def end_episode(self) -> list[EpisodeRow]:
        return []

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(meta={"interface": self.interface()})

    def load_checkpoint(self, checkpoint: Checkpoint) -> None:
        if checkpoint.meta.get("interface") != self.interface():
            raise CheckpointError("checkpoint was not written by a random agent")
