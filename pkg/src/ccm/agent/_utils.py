from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from ccm.graph import CausalGraphDynamic

from .base import GoalBox, HyperParams

logger = logging.getLogger(__name__)


def high_reward(low_reward: float, is_con: int, hp: HyperParams) -> float:
    """Reward of one high-level step: alpha * low_reward + m - n, or - m - n when the cut is controllable."""
    cross = -hp.m if is_con else hp.m
    return hp.alpha * low_reward + cross - hp.n


def box_reward(values: Any, goal: GoalBox, omega: float, upsilon: float) -> float:
    """omega minus the L1 distance from `values` to the box, minus upsilon times the distance to its center.

    The outside term is `max(values - q_max, 0) + max(q_min - values, 0)`; the inside term measures
    the box center against `values` clamped into the box.
    """
    s = np.asarray(values, dtype=float).reshape(goal.center.shape)
    q_min, q_max = goal.q_min, goal.q_max
    outside = np.maximum(s - q_max, 0.0) + np.maximum(q_min - s, 0.0)
    inside = np.abs(goal.cen - np.minimum(q_max, np.maximum(q_min, s)))
    return float(omega - outside.sum() - upsilon * inside.sum())


def box_reward_literal(values: Any, goal: GoalBox, omega: float, upsilon: float) -> float:
    """Variant whose outside term reads `max(values - q_max, 0) + max(q_min, 0)` verbatim."""
    s = np.asarray(values, dtype=float).reshape(goal.center.shape)
    q_min, q_max = goal.q_min, goal.q_max
    outside = np.maximum(s - q_max, 0.0) + np.maximum(q_min, 0.0)
    inside = np.abs(goal.cen - np.minimum(q_max, np.maximum(q_min, s)))
    return float(omega - np.abs(outside).sum() - upsilon * inside.sum())


def avg_low_reward(rewards: Sequence[float], gamma: float) -> float:
    """Discounted sum of a segment's rewards divided by the realized segment length."""
    if not len(rewards):
        logger.warning("Empty low-level segment, average reward set to 0")
        return 0.0
    r = np.asarray(rewards, dtype=float)
    return float((gamma ** np.arange(len(r)) * r).sum() / len(r))


class NodeScaler:
    """Maps node values to and from [-1, 1] using each node's bounds."""

    def __init__(self, graph: CausalGraphDynamic) -> None:
        bounds = np.array([graph.spec(node).bounds for node in graph.node_ids], dtype=float)
        self.mid = bounds.mean(axis=1)
        self.half = (bounds[:, 1] - bounds[:, 0]) / 2
        self._index = {node: i for i, node in enumerate(graph.node_ids)}

    def index(self, nodes: Iterable[int]) -> np.ndarray:
        return np.array([self._index[node] for node in nodes], dtype=int)

    def normalize(self, state: np.ndarray) -> np.ndarray:
        return (np.asarray(state, dtype=float) - self.mid) / self.half

    def to_unit(self, node: int, value: float) -> float:
        i = self._index[node]
        return float((value - self.mid[i]) / self.half[i])

    def to_value(self, node: int, action: float) -> float:
        """Node value for a unit-scale action, clipped into the node's bounds."""
        i = self._index[node]
        return float(self.mid[i] + self.half[i] * np.clip(action, -1.0, 1.0))

    def half_range(self, nodes: Iterable[int]) -> np.ndarray:
        return self.half[self.index(nodes)]


@dataclass(frozen=True)
class ViewCode:
    """Masks that place one view into the shared low-level input."""

    retained: np.ndarray
    modifiable: np.ndarray
    targets: np.ndarray
    target_index: np.ndarray
    modifiable_nodes: tuple[int, ...]
    target_nodes: tuple[int, ...]

    @classmethod
    def build(cls, scaler: NodeScaler, n: int, retained: Iterable[int], modifiable: Sequence[int], targets: Sequence[int]) -> "ViewCode":
        masks = [np.zeros(n) for _ in range(3)]
        for mask, nodes in zip(masks, (retained, modifiable, targets)):
            mask[scaler.index(nodes)] = 1.0
        return cls(
            retained=masks[0],
            modifiable=masks[1],
            targets=masks[2],
            target_index=scaler.index(targets),
            modifiable_nodes=tuple(modifiable),
            target_nodes=tuple(targets),
        )


def encode(scaler: NodeScaler, code: ViewCode, state: np.ndarray, goal: GoalBox) -> np.ndarray:
    """Low-level input: masked unit-scale values, modifiable mask, target mask and goal error."""
    unit = scaler.normalize(state)
    error = np.zeros_like(unit)
    error[code.target_index] = (goal.center - np.asarray(state, dtype=float)[code.target_index]) / scaler.half[code.target_index]
    return np.concatenate([unit * code.retained, code.modifiable, code.targets, error])
