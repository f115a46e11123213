"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of a function (e.g. r <= 0)."""


class ResolutionError(LabError):
    """A grid or spectral window cannot resolve the requested quantity."""


class BandError(LabError, ValueError):
    """A dyadic band lies outside the resolved range of a partition."""


class EvaluationError(LabError, FloatingPointError):
    """Non-finite values produced while evaluating a right-hand side."""

    def __init__(self, message: str, index: int | None = None, radius: float | None = None):
        super().__init__(message)
        self.index = index
        self.radius = radius


class ConfigError(LabError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
