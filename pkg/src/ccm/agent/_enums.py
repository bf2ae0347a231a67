from enum import Enum


class FcrLossKind(str, Enum):
    """
    Losses available for training the coupled-value reconstruction cells.
    """

    bce = "bce"
    literal = "literal"
    mse = "mse"


class LowLevelAction(str, Enum):
    """
    How many cut variables the low-level head proposes values for.
    """

    first = "first"
    full = "full"
