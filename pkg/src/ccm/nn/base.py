from __future__ import annotations

from abc import ABCMeta, abstractmethod
from typing import Any, Mapping

import numpy as np

from .exceptions import ShapeError

__all__ = ("Parametric",)


class Parametric(metaclass=ABCMeta):
    """Something that owns named parameter arrays and accumulates gradients for them."""

    @abstractmethod
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def _register(self, name: str, value: np.ndarray) -> None:
        self.params[name] = np.asarray(value, dtype=float)
        self.grads[name] = np.zeros_like(self.params[name])

    def zero_grad(self) -> None:
        """Reset every accumulated gradient to zero.

        `backward` calls add into the gradient buffers, so callers zero them before
        each update.
        """
        for grad in self.grads.values():
            grad.fill(0.0)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Copy parameters in place.

        Raises:
            ShapeError: If a name is missing or a shape differs.
        """
        for name, value in self.params.items():
            if name not in state:
                raise ShapeError(f"{type(self).__name__}: missing parameter '{name}'")
            incoming = np.asarray(state[name], dtype=float)
            if incoming.shape != value.shape:
                raise ShapeError(f"{type(self).__name__}.{name}: expected shape {value.shape}, got {incoming.shape}")
            value[...] = incoming

    @property
    def n_params(self) -> int:
        return int(sum(value.size for value in self.params.values()))

    def is_finite(self) -> bool:
        return all(bool(np.isfinite(value).all()) for value in self.params.values())
