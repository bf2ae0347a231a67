from __future__ import annotations

import logging
from typing import Any, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .base import Parametric
from .const import DEFAULT_MOMENTUM
from .exceptions import NumericsError

logger = logging.getLogger(__name__)

__all__ = ("PendingStep", "SgdMomentum", "RunningMeanStd")


class PendingStep(NamedTuple):
    """A validated update that has not touched any parameter yet."""

    norm: float
    velocity: list[dict[str, np.ndarray]]
    params: list[dict[str, np.ndarray]]


class SgdMomentum:
    """Heavy-ball SGD over one or more modules, with optional global-norm gradient clipping.

    A step either updates every parameter or, when any candidate value is not finite, none of them.
    """

    def __init__(
        self,
        modules: Union[Parametric, Sequence[Parametric]],
        lr: float,
        momentum: float = DEFAULT_MOMENTUM,
        max_grad_norm: Optional[float] = None,
    ) -> None:
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
        self.modules = [modules] if isinstance(modules, Parametric) else list(modules)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.max_grad_norm = max_grad_norm
        self.velocity: list[dict[str, np.ndarray]] = [
            {name: np.zeros_like(value) for name, value in module.params.items()} for module in self.modules
        ]

    def zero_grad(self) -> None:
        for module in self.modules:
            module.zero_grad()

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float((g**2).sum()) for module in self.modules for g in module.grads.values())))

    def propose(self) -> PendingStep:
        """Compute the next update from the accumulated gradients without applying it.

        Raises:
            NumericsError: If the gradients or the updated parameters are not finite.
        """
        norm = self.grad_norm()
        if not np.isfinite(norm):
            raise NumericsError("non-finite gradient, update skipped")
        scale = 1.0
        if self.max_grad_norm is not None and norm > self.max_grad_norm:
            scale = self.max_grad_norm / norm
        new_velocity = []
        new_params = []
        for module, velocity in zip(self.modules, self.velocity):
            v = {name: self.momentum * velocity[name] - self.lr * scale * module.grads[name] for name in module.params}
            p = {name: module.params[name] + v[name] for name in module.params}
            if not all(np.isfinite(value).all() for value in p.values()):
                raise NumericsError("update would produce non-finite parameters, skipped")
            new_velocity.append(v)
            new_params.append(p)
        return PendingStep(norm, new_velocity, new_params)

    def commit(self, pending: PendingStep) -> float:
        """Write a proposed update into the parameters and velocities; returns its pre-clip gradient norm."""
        for module, velocity, v, p in zip(self.modules, self.velocity, pending.velocity, pending.params):
            for name in module.params:
                module.params[name][...] = p[name]
                velocity[name][...] = v[name]
        return pending.norm

    def step(self) -> float:
        """Apply one update from the accumulated gradients and return the (pre-clip) gradient norm.

        Raises:
            NumericsError: If the gradients or the updated parameters are not finite.
        """
        return self.commit(self.propose())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {f"{i}/{name}": value.copy() for i, velocity in enumerate(self.velocity) for name, value in velocity.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        for i, velocity in enumerate(self.velocity):
            for name, value in velocity.items():
                value[...] = state[f"{i}/{name}"]


class RunningMeanStd:
    """Streaming mean and variance (parallel-merge form), used to scale rewards."""

    def __init__(self, epsilon: float = 1e-4) -> None:
        self.mean = 0.0
        self.var = 1.0
        self.count = float(epsilon)

    def update(self, values: Any) -> None:
        values = np.asarray(values, dtype=float).reshape(-1)
        if not values.size:
            return
        batch_mean, batch_var, batch_count = float(values.mean()), float(values.var()), float(values.size)
        delta = batch_mean - self.mean
        total = self.count + batch_count
        self.mean += delta * batch_count / total
        m2 = self.var * self.count + batch_var * batch_count + delta**2 * self.count * batch_count / total
        self.var = m2 / total
        self.count = total

    @property
    def std(self) -> float:
        return float(np.sqrt(self.var + 1e-8))

    def scale(self, values: Any) -> np.ndarray:
        """Divide by the running standard deviation without centering."""
        return np.asarray(values, dtype=float) / self.std

    def normalize(self, values: Any) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std

    def state_dict(self) -> dict[str, np.ndarray]:
        return {"mean": np.array(self.mean), "var": np.array(self.var), "count": np.array(self.count)}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        self.mean, self.var, self.count = float(state["mean"]), float(state["var"]), float(state["count"])
