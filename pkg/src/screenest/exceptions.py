from __future__ import annotations


class ScreeningError(Exception):
    """Base class for all errors raised by screenest."""


class InvalidGridError(ScreeningError):
    pass


class CurveTooShortError(InvalidGridError):
    pass


class NonConvexityError(ScreeningError):
    pass


class NonMonotoneExclusionError(ScreeningError):
    """The goods preferred at cost by the top type do not form a consecutive run."""


class WrongMethodError(ScreeningError):
    pass


class NonNestedConfigurationError(ScreeningError):
    """Indifference lines cross inside the closed type square."""


class NonNestedScheduleError(ScreeningError):
    pass


class InstanceTooLargeError(ScreeningError):
    pass


class ConfigError(ScreeningError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})" if column is not None else f" (line {line})"
        super().__init__(message + where)
