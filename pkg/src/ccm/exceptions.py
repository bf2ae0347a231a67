class CcmError(Exception):
    """Base class for every error raised by the package."""

    pass


class ConfigError(CcmError):
    """Raised when an experiment configuration is invalid."""

    pass
