from ccm.const import NON_FINITE_LOSS_ERROR_MSG
from ccm.exceptions import CcmError


class ShapeError(CcmError):
    """Raised when an input or gradient does not match a network's dimensions."""

    pass


class NumericsError(CcmError):
    """Raised when a loss or an updated parameter is not finite; the update is not applied."""

    def __init__(self, message: str = NON_FINITE_LOSS_ERROR_MSG):
        super().__init__(message)


class CheckpointError(CcmError):
    """Raised when a checkpoint file is unreadable, of another version or does not fit the target modules."""

    pass
