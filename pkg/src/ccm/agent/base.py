from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping, Optional, Union

import numpy as np

from ccm.exceptions import ConfigError
from ccm.nn.const import (
    DEFAULT_ENTROPY_COEF,
    DEFAULT_HIDDEN,
    DEFAULT_MAX_GRAD_NORM,
    DEFAULT_MOMENTUM,
    DEFAULT_POLICY_LR,
    DEFAULT_RECURRENT_HIDDEN,
    DEFAULT_VALUE_LR,
)

from ._enums import FcrLossKind, LowLevelAction
from .const import (
    DEFAULT_ALPHA,
    DEFAULT_C,
    DEFAULT_DEPTH,
    DEFAULT_EXPLORE_END,
    DEFAULT_EXPLORE_START,
    DEFAULT_EXPLORE_STEPS,
    DEFAULT_FCR_LR,
    DEFAULT_FCR_WINDOW,
    DEFAULT_GAMMA,
    DEFAULT_M,
    DEFAULT_N,
    DEFAULT_OMEGA,
    DEFAULT_SUBGOAL_HALF_WIDTH,
    DEFAULT_UPSILON,
)

__all__ = ("HyperParams", "GoalBox", "HighLevelTransition", "LowLevelTransition")


@dataclass(frozen=True)
class HyperParams:
    """Every knob of the two-level agent.

    `C` is the number of low-level steps per high-level decision and `T` caps the high-level
    decisions per episode (None: as many as the episode allows). `epsilon`, when set, replaces the
    scenario's goal half width; `explore_*` drive the annealed epsilon-greedy cut selection.
    """

    C: int = DEFAULT_C
    T: Optional[int] = None
    gamma: float = DEFAULT_GAMMA
    alpha: float = DEFAULT_ALPHA
    m: float = DEFAULT_M
    n: float = DEFAULT_N
    omega: float = DEFAULT_OMEGA
    upsilon: float = DEFAULT_UPSILON
    epsilon: Optional[float] = None
    subgoal_half_width: float = DEFAULT_SUBGOAL_HALF_WIDTH
    depth: int = DEFAULT_DEPTH
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    fcr_hidden: int = DEFAULT_RECURRENT_HIDDEN
    policy_lr: float = DEFAULT_POLICY_LR
    value_lr: float = DEFAULT_VALUE_LR
    momentum: float = DEFAULT_MOMENTUM
    entropy_coef: float = DEFAULT_ENTROPY_COEF
    max_grad_norm: Optional[float] = DEFAULT_MAX_GRAD_NORM
    init_log_std: float = -0.5
    fcr_lr: float = DEFAULT_FCR_LR
    fcr_window: int = DEFAULT_FCR_WINDOW
    fcr_loss: FcrLossKind = FcrLossKind.bce
    low_action: LowLevelAction = LowLevelAction.first
    explore_start: float = DEFAULT_EXPLORE_START
    explore_end: float = DEFAULT_EXPLORE_END
    explore_steps: int = DEFAULT_EXPLORE_STEPS
    normalize_rewards: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "fcr_loss", FcrLossKind(self.fcr_loss))
        object.__setattr__(self, "low_action", LowLevelAction(self.low_action))
        checks = [
            (self.C >= 1, f"C must be >= 1, got {self.C}"),
            (self.T is None or self.T >= 1, f"T must be >= 1, got {self.T}"),
            (0.0 < self.gamma <= 1.0, f"gamma must lie in (0, 1], got {self.gamma}"),
            (self.m >= 0 and self.n >= 0, f"m and n must be >= 0, got {self.m}, {self.n}"),
            (self.omega > 0, f"omega must be > 0, got {self.omega}"),
            (0.0 < self.upsilon < 1.0, f"upsilon must lie in (0, 1), got {self.upsilon}"),
            (self.epsilon is None or self.epsilon > 0, f"epsilon must be > 0, got {self.epsilon}"),
            (self.subgoal_half_width > 0, f"subgoal_half_width must be > 0, got {self.subgoal_half_width}"),
            (self.depth >= 2, f"depth must be >= 2, got {self.depth}"),
            (self.fcr_window >= 1, f"fcr_window must be >= 1, got {self.fcr_window}"),
            (0.0 <= self.explore_end <= self.explore_start <= 1.0, "need 0 <= explore_end <= explore_start <= 1"),
            (all(h >= 1 for h in self.hidden), f"hidden sizes must be >= 1, got {self.hidden}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for name in ("gamma", "alpha", "m", "n", "omega", "upsilon", "policy_lr", "value_lr", "fcr_lr"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    def exploration(self, steps: int) -> float:
        """Linearly annealed epsilon-greedy rate after `steps` environment steps."""
        if self.explore_steps <= 0:
            return self.explore_end
        frac = min(1.0, steps / self.explore_steps)
        return self.explore_start + frac * (self.explore_end - self.explore_start)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["hidden"] = list(self.hidden)
        data["fcr_loss"] = self.fcr_loss.value
        data["low_action"] = self.low_action.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown hyperparameters {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid hyperparameters: {e}") from e


@dataclass(frozen=True, eq=False)
class GoalBox:
    """Box [center - half_width, center + half_width], one entry per local target."""

    center: np.ndarray
    half_width: Union[float, np.ndarray]

    def __post_init__(self) -> None:
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        half_width = np.broadcast_to(np.asarray(self.half_width, dtype=float), center.shape).copy()
        if not (np.all(np.isfinite(center)) and np.all(half_width > 0)):
            raise ValueError(f"goal box needs a finite center and q_min < q_max, got {center} +/- {half_width}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_width", half_width)

    @property
    def q_min(self) -> np.ndarray:
        return self.center - self.half_width

    @property
    def q_max(self) -> np.ndarray:
        return self.center + self.half_width

    @property
    def cen(self) -> np.ndarray:
        return (self.q_max + self.q_min) / 2

    def contains(self, values: Any) -> bool:
        values = np.asarray(values, dtype=float)
        return bool(np.all((values >= self.q_min) & (values <= self.q_max)))

    def __len__(self) -> int:
        return len(self.center)

    def __repr__(self) -> str:
        return f"GoalBox<(center={self.center.tolist()}, half_width={self.half_width.tolist()})>"


@dataclass(frozen=True)
class HighLevelTransition:
    state: np.ndarray
    action: int
    reward: float
    next_state: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LowLevelTransition:
    """One low-level step of one view.

    `values` holds one unit-scaled value per cut node, in `cut` order; `values[0]` is the action.
    `head_action` is what the shared Gaussian head is trained on, padded or cut to its width.
    """

    state: np.ndarray
    goal: GoalBox
    action: float
    values: tuple[float, ...]
    reward: float
    cut: tuple[int, ...]
    head_action: np.ndarray

    def __post_init__(self) -> None:
        if len(self.values) != len(self.cut):
            raise ValueError(f"expected {len(self.cut)} cut values, got {len(self.values)}")
        if not self.values or self.values[0] != self.action:
            raise ValueError("the first cut value must equal the action")
