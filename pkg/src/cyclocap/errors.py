"""Exception hierarchy. The CLI maps each class to an exit code."""


class CyclocapError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigurationError(CyclocapError, ValueError):
    """Invalid model parameters (pulse shape, profile, scenario keys)."""

    exit_code = 3

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class DomainError(CyclocapError, ValueError):
    """Numerical input outside the domain of an operation."""

    exit_code = 3

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class ResourceError(CyclocapError, RuntimeError):
    """A requested period or batch exceeds the configured size cap."""

    exit_code = 4


class UnsupportedError(CyclocapError, ValueError):
    """Request outside what an oracle or estimator can handle."""

    exit_code = 3
