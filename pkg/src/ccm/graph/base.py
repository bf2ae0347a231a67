from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Optional, Union

from ._enums import EquationKind, HillSign, NodeRole, NoiseKind
from .const import DEFAULT_BOUNDS, DEFAULT_MAGNITUDE_FACTOR, MIN_MAGNITUDE_FACTOR, PARENTLESS_NOISE_SD
from .exceptions import GraphSpecError
from .rates import get_rate

__all__ = ("LinearGaussian", "HillTerm", "HillDelay", "OdeRate", "StructuralEquation", "NodeSpec", "NoiseRegime")


def _check_noise_sd(noise_sd: float) -> None:
    if not math.isfinite(noise_sd) or noise_sd < 0:
        raise GraphSpecError(f"noise_sd must be a finite non-negative number, got {noise_sd}")


@dataclass(frozen=True)
class LinearGaussian:
    """x_i ~ N(sum_j w_ij x_j, noise_sd), one weight per parent in ascending parent-id order."""

    weights: tuple[float, ...] = ()
    noise_sd: float = PARENTLESS_NOISE_SD

    kind: ClassVar[EquationKind] = EquationKind.linear_gaussian

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        _check_noise_sd(self.noise_sd)

    @property
    def arity(self) -> int:
        return len(self.weights)

    @property
    def max_delay(self) -> int:
        return 0


@dataclass(frozen=True)
class HillTerm:
    sign: HillSign
    beta: float
    k: float
    n: float
    delay: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "sign", HillSign(self.sign))
        # beta == 0 is allowed for zero-gain ablations
        if self.beta < 0:
            raise GraphSpecError(f"hill gain must be >= 0, got {self.beta}")
        if self.k <= 0:
            raise GraphSpecError(f"hill threshold must be > 0, got {self.k}")
        if self.n < 1:
            raise GraphSpecError(f"hill exponent must be >= 1, got {self.n}")
        if int(self.delay) != self.delay or self.delay < 0:
            raise GraphSpecError(f"hill delay must be a non-negative integer, got {self.delay}")
        object.__setattr__(self, "delay", int(self.delay))


@dataclass(frozen=True)
class HillDelay:
    """Sum of per-parent hill terms, each reading its parent `delay` steps back, plus N(0, noise_sd)."""

    terms: tuple[HillTerm, ...] = ()
    noise_sd: float = PARENTLESS_NOISE_SD

    kind: ClassVar[EquationKind] = EquationKind.hill_delay

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        _check_noise_sd(self.noise_sd)

    @property
    def arity(self) -> int:
        return len(self.terms)

    @property
    def max_delay(self) -> int:
        return max((term.delay for term in self.terms), default=0)


@dataclass(frozen=True)
class OdeRate:
    """dx/dt given by the named rate function, integrated over one step of length `h`."""

    rate: str
    params: Mapping[str, float] = field(default_factory=dict)
    h: float = 1.0

    kind: ClassVar[EquationKind] = EquationKind.ode_rate

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", {key: float(value) for key, value in self.params.items()})
        if self.h <= 0:
            raise GraphSpecError(f"integration step must be > 0, got {self.h}")

    @property
    def arity(self) -> Optional[int]:
        return get_rate(self.rate).arity

    @property
    def max_delay(self) -> int:
        return 0


StructuralEquation = Union[LinearGaussian, HillDelay, OdeRate]


@dataclass(frozen=True)
class NodeSpec:
    id: int
    role: NodeRole
    equation: StructuralEquation
    init_value: float = 0.0
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", NodeRole(self.role))
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        if not self.bounds[0] < self.bounds[1]:
            raise GraphSpecError(f"node {self.id}: bounds must satisfy lo < hi, got {self.bounds}")
        if not self.name:
            object.__setattr__(self, "name", f"x{self.id}")


@dataclass(frozen=True)
class NoiseRegime:
    kind: NoiseKind = NoiseKind.none
    trigger_prob: float = 0.0
    magnitude_factor: float = DEFAULT_MAGNITUDE_FACTOR

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not 0.0 <= self.trigger_prob <= 1.0:
            raise GraphSpecError(f"trigger_prob must lie in [0, 1], got {self.trigger_prob}")
        if self.kind is NoiseKind.random_large and self.magnitude_factor <= MIN_MAGNITUDE_FACTOR:
            raise GraphSpecError(f"random_large noise needs magnitude_factor > {MIN_MAGNITUDE_FACTOR}, got {self.magnitude_factor}")

    @property
    def active(self) -> bool:
        return self.kind is NoiseKind.random_large
