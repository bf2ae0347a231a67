from ccm.const import CHAIN_ERROR_MSG
from ccm.exceptions import CcmError


class ChainError(CcmError):
    """Raised when the local target of a view is not the local modifiable set of the view below it."""

    def __init__(self, message: str = CHAIN_ERROR_MSG):
        super().__init__(message)
