from ccm.exceptions import CcmError

from .const import JOB_BOARD_BROKEN_ERROR_MSG


class JobBoardBroken(CcmError):
    """Raised when the job board file is modified or corrupted."""

    def __init__(self, message: str = JOB_BOARD_BROKEN_ERROR_MSG):
        super().__init__(message)


class SeedJobFailed(CcmError):
    """Raised after a run when one or more seed jobs failed; completed seeds are kept."""

    def __init__(self, failures: dict[int, str]):
        self.failures = dict(failures)
        details = "; ".join(f"seed {seed}: {error}" for seed, error in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} seed job(s) failed: {details}")
