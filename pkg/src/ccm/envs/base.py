from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Optional

import numpy as np

from ccm.graph import CausalGraphDynamic, Edge, NodeSpec, NoiseRegime

from ._enums import PatientGroup
from .const import TIR_HIGH, TIR_LOW
from .exceptions import ParamError

__all__ = ("IndividualParams", "MealSchedule", "Scenario", "StepResult")


@dataclass(frozen=True)
class IndividualParams:
    """Parameter vector of the reduced glucose model for one individual."""

    params: Mapping[str, float]
    group: PatientGroup = PatientGroup.adult
    id: str = "adult#000"

    def __post_init__(self) -> None:
        object.__setattr__(self, "group", PatientGroup(self.group))
        object.__setattr__(self, "params", {key: float(value) for key, value in sorted(self.params.items())})
        bad = [key for key, value in self.params.items() if not (math.isfinite(value) and value > 0)]
        if bad:
            raise ParamError(f"{self.id}: parameters {bad} must be finite and positive")

    def vector(self, keys: Optional[tuple[str, ...]] = None) -> np.ndarray:
        keys = keys or tuple(self.params)
        return np.array([self.params[key] for key in keys], dtype=float)

    def distance(self, other: "IndividualParams") -> float:
        """Mean absolute log-ratio over the shared parameters."""
        keys = tuple(sorted(set(self.params) & set(other.params)))
        return float(np.abs(np.log(self.vector(keys) / other.vector(keys))).mean())

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "group": self.group.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "IndividualParams":
        return cls(params=data["params"], group=data.get("group", PatientGroup.adult), id=data.get("id", "adult#000"))


@dataclass(frozen=True)
class MealSchedule:
    """Carbohydrate impulses added to the gut node at jittered times of the day."""

    node: int
    times: tuple[int, ...]
    amounts: tuple[float, ...]
    jitter: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", tuple(int(t) for t in self.times))
        object.__setattr__(self, "amounts", tuple(float(a) for a in self.amounts))
        if len(self.times) != len(self.amounts):
            raise ValueError("meal times and amounts must have the same length")
        if self.jitter < 0 or any(a < 0 for a in self.amounts):
            raise ValueError("meal jitter and amounts must be non-negative")

    def draw(self, rng: Optional[np.random.Generator] = None) -> dict[int, float]:
        """Realized `step -> amount` mapping for one episode; no jitter without `rng`."""
        meals: dict[int, float] = {}
        for time, amount in zip(self.times, self.amounts):
            shift = int(rng.integers(-self.jitter, self.jitter + 1)) if rng is not None and self.jitter else 0
            step = max(0, time + shift)
            meals[step] = meals.get(step, 0.0) + amount
        return meals


@dataclass(frozen=True)
class Scenario:
    """A graph fixture plus everything an episode needs: goal box, noise regime and episode length."""

    name: str
    specs: tuple[NodeSpec, ...]
    edges: tuple[Edge, ...]
    goal_center: tuple[float, ...]
    goal_half_width: float
    noise: NoiseRegime = field(default_factory=NoiseRegime)
    episode_len: int = 100
    individual: Optional[IndividualParams] = None
    meals: Optional[MealSchedule] = None
    metrics: tuple[str, ...] = ("reward",)
    digest: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "goal_center", tuple(float(g) for g in self.goal_center))
        if self.goal_half_width <= 0:
            raise ValueError(f"goal half width must be > 0, got {self.goal_half_width}")
        if self.episode_len < 1:
            raise ValueError(f"episode length must be >= 1, got {self.episode_len}")

    def build_graph(self) -> CausalGraphDynamic:
        graph = CausalGraphDynamic(self.specs, self.edges)
        if len(self.goal_center) != len(graph.targets):
            raise ValueError(f"{self.name}: goal has {len(self.goal_center)} entries for {len(graph.targets)} targets")
        return graph

    @property
    def tir_range(self) -> tuple[float, float]:
        return TIR_LOW, TIR_HIGH


class StepResult(NamedTuple):
    state: np.ndarray
    done: bool
    info: dict[str, Any]
