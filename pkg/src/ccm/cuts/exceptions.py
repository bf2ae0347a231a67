from ccm.const import BOUNDARY_ERROR_MSG, NO_PATH_ERROR_MSG
from ccm.exceptions import CcmError


class NoPathError(CcmError):
    """Raised when no sink is reachable from the sources."""

    def __init__(self, message: str = NO_PATH_ERROR_MSG):
        super().__init__(message)


class NoCutError(CcmError):
    """Raised when sources and sinks touch, so no interior vertex cut exists."""

    def __init__(self, message: str = "sources reach sinks without passing an interior node"):
        super().__init__(message)


class BoundaryError(CcmError):
    """Raised when the sets handed to surgery overlap or are not part of the graph."""

    def __init__(self, message: str = BOUNDARY_ERROR_MSG):
        super().__init__(message)
