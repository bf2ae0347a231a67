from ccm.exceptions import CcmError

from .const import FIXTURE_DIGEST_ERROR_MSG, PARAM_ERROR_MSG


class ParamError(CcmError):
    """Raised when an individual's glucose parameters are not all positive."""

    def __init__(self, message: str = PARAM_ERROR_MSG):
        super().__init__(message)


class FixtureDigestError(CcmError):
    """Raised when a committed scenario fixture was modified."""

    def __init__(self, message: str = FIXTURE_DIGEST_ERROR_MSG):
        super().__init__(message)


class UnknownScenarioError(CcmError):
    """Raised when a scenario name has no fixture."""

    pass
