"""Exception hierarchy shared by every curveq module."""


class CurveqError(Exception):
    """Base class for all errors raised by curveq."""


class DomainError(CurveqError, ValueError):
    """A model was evaluated outside the region where it is defined."""


class NotAttainableError(CurveqError, ValueError):
    """A target response lies at or beyond what the model can produce."""


class UnsupportedModelError(CurveqError, ValueError):
    """The requested operation needs a property the model does not have."""


class RankDeficiencyError(CurveqError, ValueError):
    """The information matrix of a fit cannot be inverted."""


class DataFormatError(CurveqError, ValueError):
    """An input file does not follow the expected layout."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(CurveqError, ValueError):
    """An analysis configuration failed validation."""
