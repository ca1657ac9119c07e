"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A parameter violates its documented domain."""


class NumericalFailure(ArithmeticError):
    """A numerical routine could not reach its accuracy target.

    ``error_estimate`` carries the best error estimate achieved, when known.
    """

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""

    def __init__(self, key: str | None, message: str):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class OutputFileError(OSError):
    """An output file could not be written."""

    def __init__(self, message: str, path: str):
        super().__init__(message)
        self.path = path
