from __future__ import annotations

import math
from abc import ABCMeta, abstractmethod
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from ._enums import AgentKind, LogLevel

if TYPE_CHECKING:
    from ccm.nn import Checkpoint

__all__ = ("Agent", "EpisodeRow")


@dataclass
class EpisodeRow:
    """One row of an episode log. Columns that do not apply to a row stay NaN."""

    level: LogLevel
    t: int
    view: int = 0
    cut_id: int = -1
    goal_center: float = math.nan
    action: float = math.nan
    reward: float = math.nan
    target_value: float = math.nan
    loss_policy: float = math.nan
    loss_value: float = math.nan
    loss_fcr: float = math.nan
    seed: int = 0
    episode: int = 0

    def to_dict(self) -> dict[str, Any]:
        row = asdict(self)
        row["level"] = LogLevel(self.level).value
        return row


class Agent(metaclass=ABCMeta):
    """A controller that drives the modifiable nodes of a graph towards a goal box on its targets.

    The trainer calls `begin_episode` once, then alternates `act` and `observe` for every
    environment step, then `end_episode`. Learning happens inside `observe` and `end_episode`
    while `training` is True; in eval mode the agent acts greedily and never updates.
    """

    kind: ClassVar[AgentKind]

    @abstractmethod
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        self.training = True

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    @abstractmethod
    def begin_episode(self, state: np.ndarray) -> None:
        """Reset per-episode bookkeeping from the initial state vector."""
        pass

    @abstractmethod
    def act(self, state: np.ndarray) -> dict[int, float]:
        """Return the interventions (node id -> value) for the next step."""
        pass

    @abstractmethod
    def observe(self, state: np.ndarray, done: bool) -> list[EpisodeRow]:
        """Record the state reached by the last action and return the log rows it produced.

        Args:
            state (np.ndarray): State vector after the step.
            done (bool): Whether this step ends the episode.
        """
        pass

    @abstractmethod
    def end_episode(self) -> list[EpisodeRow]:
        """Close the episode, run any pending updates and return their log rows."""
        pass

    @abstractmethod
    def checkpoint(self) -> "Checkpoint":
        """Snapshot every parameter bundle, optimizer state and normalizer."""
        pass

    @abstractmethod
    def load_checkpoint(self, checkpoint: "Checkpoint") -> None:
        """Restore a snapshot produced by `checkpoint`.

        Raises:
            CheckpointError: If the snapshot does not fit this agent.
        """
        pass

    def interface(self) -> dict[str, Any]:
        """Description of the graph interface the agent was built for, stored in checkpoint metadata."""
        return {"kind": self.kind.value}

    def __repr__(self) -> str:
        mode = "train" if self.training else "eval"
        return f"{type(self).__name__}<(mode={mode})>"
