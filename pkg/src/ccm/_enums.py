from enum import Enum


class LogLevel(str, Enum):
    """
    Kinds of rows in an episode log.
    """

    high = "high"
    low = "low"
    update = "update"
    random = "random"


class AgentKind(str, Enum):
    ccm = "ccm"
    flat = "flat"
    random = "random"
