from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from ccm._enums import AgentKind, LogLevel
from ccm.base import Agent, EpisodeRow
from ccm.cuts import CcmView, CutSet, CutSetCatalog, chain_views, controllable_region, enumerate_min_cuts, features
from ccm.graph import CausalGraphDynamic
from ccm.nn import (
    A2cOptimizers,
    CategoricalHead,
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

from ._enums import LowLevelAction
from ._utils import NodeScaler, ViewCode, avg_low_reward, box_reward, encode, high_reward
from .base import GoalBox, HighLevelTransition, HyperParams, LowLevelTransition
from .exceptions import ChainError
from .fcr import FcrModule, RunningRange

logger = logging.getLogger(__name__)

__all__ = ("CcmAgent", "cascade_goals")

Proposer = Callable[[CcmView, GoalBox], np.ndarray]


def cascade_goals(
    views: Sequence[CcmView],
    goal: GoalBox,
    proposer: Proposer,
    half_width: Optional[Union[float, Callable[[CcmView], Any]]] = None,
) -> list[GoalBox]:
    """Assign a goal to every view of a downstream-to-upstream chain.

    The first view gets the global goal. Each further view's goal is centered on the values the
    low-level policy proposes for the previous view's modifiable (cut) variables, given that view's
    state and goal.

    Args:
        views (Sequence[CcmView]): The chain, nearest to the global targets first.
        goal (GoalBox): The global goal.
        proposer (Proposer): Maps a view and its goal to proposed values of its local modifiable nodes.
        half_width (Optional[Union[float, Callable[[CcmView], Any]]]): Half width of cascaded goals,
            constant or per upstream view. Defaults to the global goal's first half width.

    Returns:
        list[GoalBox]: One goal per view.

    Raises:
        ChainError: If a view's local targets are not the previous view's local modifiable nodes.
    """
    goals = [goal]
    for k in range(1, len(views)):
        below, view = views[k - 1], views[k]
        if set(view.local_target) != set(below.local_modifiable):
            raise ChainError(f"view {k} targets {list(view.local_target)}, view {k - 1} is driven by {list(below.local_modifiable)}")
        center = np.asarray(proposer(below, goals[k - 1]), dtype=float)
        if half_width is None:
            width: Any = float(goal.half_width[0])
        elif callable(half_width):
            width = half_width(view)
        else:
            width = half_width
        goals.append(GoalBox(center=center, half_width=width))
    return goals


@dataclass
class _Segment:
    cut_index: int
    is_con: int
    high_state: np.ndarray
    chain: list[CcmView]
    codes: list[ViewCode]
    goals: list[GoalBox]
    start: int
    steps: list[list[LowLevelTransition]] = field(default_factory=list)
    pending: list[np.ndarray] = field(default_factory=list)
    action: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.steps[0]) if self.steps else 0


class CcmAgent(Agent):
    """Two-level controller over a graph's minimum vertex cuts.

    Every `C` steps the high-level policy picks a cut from the catalog, the graph is split into a
    chain of views at that cut and cascaded goals are assigned down the chain. One goal-conditioned
    low-level policy, shared by all views, drives the most upstream view through the global
    modifiable nodes; the other views learn from the boundary values that actually followed.
    """

    kind = AgentKind.ccm

    def __init__(
        self,
        graph: CausalGraphDynamic,
        goal: GoalBox,
        hp: Optional[HyperParams] = None,
        rng: Optional[np.random.Generator] = None,
        catalog: Optional[CutSetCatalog] = None,
    ) -> None:
        super().__init__()
        self.graph = graph
        self.goal = goal
        self.hp = hp or HyperParams()
        self.rng = rng or np.random.default_rng(0)
        self.catalog = catalog if catalog is not None else enumerate_min_cuts(graph)
        if not len(self.catalog):
            raise ValueError("the graph has no minimum cut to act on")
        self.scaler = NodeScaler(graph)
        self.sources = tuple(graph.modifiable)
        n = len(graph.node_ids)

        self.chains = [chain_views(graph, cut, self.hp.depth) for cut in self.catalog]
        self.codes = [
            [ViewCode.build(self.scaler, n, view.nodes, view.local_modifiable, view.local_target) for view in chain]
            for chain in self.chains
        ]
        if self.hp.low_action is LowLevelAction.first:
            self.action_dim = max(1, len(self.sources))
        else:
            widths = [len(view.local_modifiable) for chain in self.chains for view in chain]
            self.action_dim = max([len(self.sources), *widths])

        hidden = self.hp.hidden
        feature_dim = len(self.catalog) * len(features(graph, self.catalog)[0].as_vector())
        self.high_policy = FeedforwardNet((feature_dim, *hidden, len(self.catalog)), self.rng, output_scale=0.01)
        self.high_value = FeedforwardNet((feature_dim, *hidden, 1), self.rng)
        self.high_head = CategoricalHead()
        self.low_policy = FeedforwardNet((4 * n, *hidden, self.action_dim), self.rng, output_scale=0.01)
        self.low_value = FeedforwardNet((4 * n, *hidden, 1), self.rng)
        self.low_head = DiagonalGaussianHead(self.action_dim, self.hp.init_log_std)
        self.high_optimizers = self._optimizers(self.high_policy, self.high_value)
        self.low_optimizers = self._optimizers([self.low_policy, self.low_head], self.low_value)

        self.fcr: dict[CutSet, FcrModule] = {}
        for chain in self.chains:
            for view in chain[:-1]:
                cut = CutSet(view.local_modifiable)
                if cut.size >= 2 and cut not in self.fcr:
                    self.fcr[cut] = FcrModule(
                        self.scaler.index(cut.nodes),
                        self.hp.fcr_hidden,
                        self.rng,
                        lr=self.hp.fcr_lr,
                        window=self.hp.fcr_window,
                        kind=self.hp.fcr_loss,
                        max_grad_norm=self.hp.max_grad_norm,
                    )
        self.ranges = RunningRange(n)
        self.low_rewards = RunningMeanStd()
        self.high_rewards = RunningMeanStd()
        self.total_steps = 0
        self._reset_episode()

    def _optimizers(self, policy: Any, value: FeedforwardNet) -> A2cOptimizers:
        return A2cOptimizers(
            policy=SgdMomentum(policy, self.hp.policy_lr, self.hp.momentum, self.hp.max_grad_norm),
            value=SgdMomentum(value, self.hp.value_lr, self.hp.momentum, self.hp.max_grad_norm),
        )

    def _reset_episode(self) -> None:
        self.t = 0
        self._segment: Optional[_Segment] = None
        self._region: frozenset[int] = frozenset()
        self._states: list[np.ndarray] = []
        self._high: list[HighLevelTransition] = []
        self._low_losses: list[tuple[float, float]] = []

    @property
    def exploration(self) -> float:
        return self.hp.exploration(self.total_steps) if self.training else 0.0

    def begin_episode(self, state: np.ndarray) -> None:
        self._reset_episode()
        state = np.asarray(state, dtype=float)
        self._states.append(state.copy())
        self.ranges.update(state)

    def high_state(self, region: frozenset[int] = frozenset()) -> np.ndarray:
        rows = features(self.graph, self.catalog, region)
        return np.concatenate([row.as_vector() for row in rows])

    def select_cut(self, high_state: np.ndarray) -> int:
        """Epsilon-greedy over the categorical head while training, argmax otherwise."""
        logits = self.high_policy(high_state)
        if not self.training:
            return int(np.argmax(logits))
        if self.rng.random() < self.exploration:
            return int(self.rng.integers(len(self.catalog)))
        index, _ = self.high_head.sample(logits, self.rng)
        return index

    def _subgoal_width(self, view: CcmView) -> np.ndarray:
        return self.hp.subgoal_half_width * self.scaler.half_range(view.local_target)

    def propose(self, view: CcmView, code: ViewCode, state: np.ndarray, goal: GoalBox) -> np.ndarray:
        """Values the low-level policy wants for the view's modifiable nodes (the head mean)."""
        mean = self.low_policy(encode(self.scaler, code, state, goal))
        nodes = view.local_modifiable
        if self.hp.low_action is LowLevelAction.full:
            return np.array([self.scaler.to_value(node, mean[j] if j < len(mean) else 0.0) for j, node in enumerate(nodes)])
        first = self.scaler.to_value(nodes[0], mean[0])
        if len(nodes) == 1:
            return np.array([first])
        module = self.fcr[CutSet(nodes)]
        companions = module.predict(first, np.stack(self._states), self.ranges)
        return np.concatenate([[first], companions])

    def _start_segment(self, state: np.ndarray) -> _Segment:
        high_state = self.high_state(self._region)
        index = self.select_cut(high_state)
        is_con = int(high_state.reshape(len(self.catalog), -1)[index, 0])
        chain, codes = self.chains[index], self.codes[index]
        by_view = {id(view): code for view, code in zip(chain, codes)}
        goals = cascade_goals(
            chain,
            self.goal,
            lambda view, goal: self.propose(view, by_view[id(view)], state, goal),
            half_width=self._subgoal_width,
        )
        self._region = controllable_region(chain[0])
        logger.debug(f"Step {self.t}: cut {self.catalog[index]} (isCon={is_con}), goals {[g.center.tolist() for g in goals]}")
        return _Segment(
            cut_index=index,
            is_con=is_con,
            high_state=high_state,
            chain=chain,
            codes=codes,
            goals=goals,
            start=self.t,
            steps=[[] for _ in chain],
        )

    def act(self, state: np.ndarray) -> dict[int, float]:
        state = np.asarray(state, dtype=float)
        if self._segment is None:
            self._segment = self._start_segment(state)
        segment = self._segment
        segment.pending = [encode(self.scaler, code, state, goal) for code, goal in zip(segment.codes, segment.goals)]
        mean = self.low_policy(segment.pending[-1])
        action, _ = self.low_head.sample(mean, self.rng, deterministic=not self.training)
        segment.action = action
        return {node: self.scaler.to_value(node, action[i] if i < len(action) else 0.0) for i, node in enumerate(self.sources)}

    def _cut_values(self, view: CcmView, state: np.ndarray, action: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
        """Unit values of every cut node and the matching head action.

        Without a sampled action the boundary values that actually followed stand in for it.
        """
        realized = np.array([self.scaler.to_unit(node, state[self.graph.index(node)]) for node in view.local_modifiable])
        if action is None:
            head_action = np.zeros(self.action_dim)
            width = min(self.action_dim, len(realized))
            head_action[:width] = realized[:width]
            return realized, head_action
        width = min(len(action), len(realized))
        realized[:width] = action[:width]
        return realized, action

    def observe(self, state: np.ndarray, done: bool) -> list[EpisodeRow]:
        segment = self._segment
        if segment is None or segment.action is None:
            raise RuntimeError("observe called without a preceding act")
        state = np.asarray(state, dtype=float)
        self.t += 1
        self.total_steps += 1
        self._states.append(state.copy())
        self.ranges.update(state)

        rows = []
        last = len(segment.chain) - 1
        for k, (view, code, goal) in enumerate(zip(segment.chain, segment.codes, segment.goals)):
            targets = state[code.target_index]
            reward = box_reward(targets, goal, self.hp.omega, self.hp.upsilon)
            values, head_action = self._cut_values(view, state, segment.action if k == last else None)
            segment.steps[k].append(
                LowLevelTransition(
                    state=segment.pending[k],
                    goal=goal,
                    action=float(values[0]),
                    values=tuple(float(v) for v in values),
                    reward=reward,
                    cut=tuple(view.local_modifiable),
                    head_action=head_action,
                )
            )
            first = view.local_modifiable[0]
            rows.append(
                EpisodeRow(
                    level=LogLevel.low,
                    t=self.t,
                    view=k,
                    cut_id=segment.cut_index,
                    goal_center=float(goal.center[0]),
                    action=self.scaler.to_value(first, values[0]) if k == last else float(state[self.graph.index(first)]),
                    reward=reward,
                    target_value=float(targets[0]),
                )
            )
        segment.action = None
        if len(segment) >= self.hp.C or done:
            rows.append(self._close_segment(state, done))
        return rows

    def _low_trajectory(self, segment: _Segment, state: np.ndarray, done: bool) -> Trajectory:
        trajectory = Trajectory(gamma=self.hp.gamma)
        raw = [step.reward for steps in segment.steps for step in steps]
        if self.hp.normalize_rewards:
            self.low_rewards.update(raw)
        for code, goal, steps in zip(segment.codes, segment.goals, segment.steps):
            tail = 0.0 if done else self.hp.gamma * float(self.low_value(encode(self.scaler, code, state, goal))[0])
            for i, step in enumerate(steps):
                reward = float(self.low_rewards.scale(step.reward)) if self.hp.normalize_rewards else step.reward
                end = i == len(steps) - 1
                trajectory.append(step.state, step.head_action, reward + (tail if end else 0.0), done=end)
        return trajectory

    def _close_segment(self, state: np.ndarray, done: bool) -> EpisodeRow:
        segment = self._segment
        assert segment is not None
        per_view = [avg_low_reward([step.reward for step in steps], self.hp.gamma) for steps in segment.steps]
        reward = high_reward(per_view[0], segment.is_con, self.hp)
        self._high.append(HighLevelTransition(state=segment.high_state, action=segment.cut_index, reward=reward))
        if self.training and len(segment):
            try:
                result = a2c_update(
                    self._low_trajectory(segment, state, done),
                    self.low_policy,
                    self.low_value,
                    self.low_optimizers,
                    head=self.low_head,
                    entropy_coef=self.hp.entropy_coef,
                )
                self._low_losses.append((result.policy_loss, result.value_loss))
            except NumericsError as e:
                logger.warning(f"Low-level update skipped at step {self.t}: {e}")
        self._segment = None
        return EpisodeRow(level=LogLevel.high, t=segment.start, view=-1, cut_id=segment.cut_index, action=float(segment.cut_index), reward=reward)

    def end_episode(self) -> list[EpisodeRow]:
        rows = []
        if self._segment is not None and len(self._segment):
            rows.append(self._close_segment(self._states[-1], True))
        self._segment = None
        if not self.training:
            return rows
        high_losses = (float("nan"), float("nan"))
        if self._high:
            trajectory = Trajectory(gamma=self.hp.gamma)
            raw = [transition.reward for transition in self._high]
            if self.hp.normalize_rewards:
                self.high_rewards.update(raw)
            for transition in self._high:
                reward = float(self.high_rewards.scale(transition.reward)) if self.hp.normalize_rewards else transition.reward
                trajectory.append(transition.state, transition.action, reward)
            try:
                result = a2c_update(
                    trajectory,
                    self.high_policy,
                    self.high_value,
                    self.high_optimizers,
                    head=self.high_head,
                    entropy_coef=self.hp.entropy_coef,
                )
                high_losses = (result.policy_loss, result.value_loss)
            except NumericsError as e:
                logger.warning(f"High-level update skipped at step {self.t}: {e}")
        states = np.stack(self._states)
        fcr_losses = [module.fit(states, self.ranges) for module in self.fcr.values()]
        fcr_losses = [loss for loss in fcr_losses if np.isfinite(loss)]
        low = np.array(self._low_losses) if self._low_losses else np.full((1, 2), np.nan)
        return rows + [
            EpisodeRow(level=LogLevel.update, t=self.t, view=-1, loss_policy=high_losses[0], loss_value=high_losses[1]),
            EpisodeRow(
                level=LogLevel.update,
                t=self.t,
                view=0,
                loss_policy=float(np.nanmean(low[:, 0])) if np.isfinite(low[:, 0]).any() else float("nan"),
                loss_value=float(np.nanmean(low[:, 1])) if np.isfinite(low[:, 1]).any() else float("nan"),
                loss_fcr=float(np.mean(fcr_losses)) if fcr_losses else float("nan"),
            ),
        ]

    def _fcr_name(self, cut: CutSet) -> str:
        return "cut-" + "-".join(str(node) for node in cut)

    def interface(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "nodes": list(self.graph.node_ids),
            "modifiable": list(self.graph.modifiable),
            "targets": list(self.graph.targets),
            "edges": [list(edge) for edge in self.graph.edges],
            "cuts": [list(cut.nodes) for cut in self.catalog],
            "hidden": list(self.hp.hidden),
            "depth": self.hp.depth,
            "low_action": self.hp.low_action.value,
            "action_dim": self.action_dim,
        }

    def checkpoint(self) -> Checkpoint:
        ckpt = Checkpoint(meta={"interface": self.interface(), "hp": self.hp.to_dict(), "total_steps": self.total_steps})
        for name in ("high_policy", "high_value", "low_policy", "low_value", "low_head"):
            ckpt.add("module", name, getattr(self, name))
        for name, optimizers in (("high", self.high_optimizers), ("low", self.low_optimizers)):
            ckpt.add("optim", f"{name}_policy", optimizers.policy)
            ckpt.add("optim", f"{name}_value", optimizers.value)
        for cut, module in self.fcr.items():
            ckpt.add("fcr", self._fcr_name(cut), module)
            ckpt.add("optim", f"fcr_{self._fcr_name(cut)}", module.optimizer)
        ckpt.add("norm", "low_rewards", self.low_rewards)
        ckpt.add("norm", "high_rewards", self.high_rewards)
        ckpt.add("norm", "ranges", self.ranges)
        return ckpt

    def load_checkpoint(self, checkpoint: Checkpoint) -> None:
        interface = checkpoint.meta.get("interface")
        if interface != self.interface():
            raise CheckpointError(f"checkpoint was written for {interface}, agent has {self.interface()}")
        for name in ("high_policy", "high_value", "low_policy", "low_value", "low_head"):
            checkpoint.restore("module", name, getattr(self, name))
        for name, optimizers in (("high", self.high_optimizers), ("low", self.low_optimizers)):
            checkpoint.restore("optim", f"{name}_policy", optimizers.policy)
            checkpoint.restore("optim", f"{name}_value", optimizers.value)
        for cut, module in self.fcr.items():
            checkpoint.restore("fcr", self._fcr_name(cut), module)
            checkpoint.restore("optim", f"fcr_{self._fcr_name(cut)}", module.optimizer)
        checkpoint.restore("norm", "low_rewards", self.low_rewards)
        checkpoint.restore("norm", "high_rewards", self.high_rewards)
        checkpoint.restore("norm", "ranges", self.ranges)
        self.total_steps = int(checkpoint.meta.get("total_steps", 0))
