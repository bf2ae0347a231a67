"""Named rate functions for `OdeRate` nodes.

A rate function receives the node's own current value, its parent values in ascending
parent-id order and the node's parameter mapping, and returns dx/dt per unit time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .exceptions import GraphSpecError

__all__ = ("RateFunction", "RateSpec", "register_rate", "get_rate", "available_rates")

RateFunction = Callable[[float, np.ndarray, Mapping[str, float]], float]


@dataclass(frozen=True)
class RateSpec:
    name: str
    func: RateFunction
    arity: Optional[int]
    params: tuple[str, ...]
    nonnegative: bool


_RATES: dict[str, RateSpec] = {}


def register_rate(
    name: str, arity: Optional[int] = None, params: tuple[str, ...] = (), nonnegative: bool = True
) -> Callable[[RateFunction], RateFunction]:
    """Register a rate function under `name`.

    Args:
        name (str): Name used by `OdeRate.rate`.
        arity (Optional[int]): Required parent count, None for any.
        params (tuple[str, ...]): Parameter names that must be present on the equation.
        nonnegative (bool): Clamp the integrated state at zero. Defaults to True.
    """

    def decorator(func: RateFunction) -> RateFunction:
        if name in _RATES:
            raise ValueError(f"rate '{name}' is already registered")
        _RATES[name] = RateSpec(name=name, func=func, arity=arity, params=params, nonnegative=nonnegative)
        return func

    return decorator


def get_rate(name: str) -> RateSpec:
    try:
        return _RATES[name]
    except KeyError:
        raise GraphSpecError(f"unknown rate function '{name}'") from None


def available_rates() -> list[str]:
    return sorted(_RATES)


@register_rate("linear_decay", params=("decay", "gain"), nonnegative=False)
def linear_decay(x: float, parents: np.ndarray, p: Mapping[str, float]) -> float:
    return float(-p["decay"] * x + p["gain"] * parents.sum())


@register_rate("gut_absorption", arity=0, params=("k_abs",))
def gut_absorption(q: float, parents: np.ndarray, p: Mapping[str, float]) -> float:
    # meals arrive as impulses added to the state, not through the rate
    return -p["k_abs"] * q


@register_rate("plasma_insulin", arity=1, params=("k_clear", "v_i"))
def plasma_insulin(i: float, parents: np.ndarray, p: Mapping[str, float]) -> float:
    (infusion,) = parents
    return float(-p["k_clear"] * i + max(infusion, 0.0) / p["v_i"])


@register_rate("insulin_action", arity=1, params=("p2", "p3"))
def insulin_action(x: float, parents: np.ndarray, p: Mapping[str, float]) -> float:
    (insulin,) = parents
    return float(-p["p2"] * x + p["p3"] * max(insulin, 0.0))


@register_rate("plasma_glucose", arity=2, params=("p1", "g0", "f", "k_abs", "v_g"))
def plasma_glucose(g: float, parents: np.ndarray, p: Mapping[str, float]) -> float:
    action, gut = parents
    appearance = p["f"] * p["k_abs"] * max(gut, 0.0) / p["v_g"]
    return float(-(p["p1"] + max(action, 0.0)) * g + p["p1"] * p["g0"] + appearance)
