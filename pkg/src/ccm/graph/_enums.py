from enum import Enum


class NodeRole(str, Enum):
    """
    Roles of the observable variables of a causal graph dynamic.
    """

    modifiable = "modifiable"
    target = "target"
    observed = "observed"


class EquationKind(str, Enum):
    """
    Variants of structural equations a node can carry.
    """

    linear_gaussian = "linear_gaussian"
    hill_delay = "hill_delay"
    ode_rate = "ode_rate"


class HillSign(str, Enum):
    activation = "activation"
    repression = "repression"


class NoiseKind(str, Enum):
    none = "none"
    random_large = "random_large"
