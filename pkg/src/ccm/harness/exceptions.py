from typing import Optional

from ccm.exceptions import CcmError, ConfigError

__all__ = ("ConfigError", "IncompatibleCheckpointError", "MismatchError", "ReportMismatchError")


class IncompatibleCheckpointError(CcmError):
    """Raised when a checkpoint does not fit the scenario it is evaluated on."""

    pass


class MismatchError(CcmError):
    """Raised when two reports cannot be compared."""

    pass


class ReportMismatchError(CcmError):
    """Raised when a report differs from the numbers re-derived from its episode log."""

    def __init__(self, differences: dict[str, tuple[object, object]], message: Optional[str] = None) -> None:
        self.differences = differences
        if message is None:
            listed = ", ".join(f"{key}: {a!r} != {b!r}" for key, (a, b) in sorted(differences.items()))
            message = f"report does not match its episode log ({listed})"
        super().__init__(message)
