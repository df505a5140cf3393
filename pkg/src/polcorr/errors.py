"""Exception hierarchy shared by the library and the command line front end."""


class PolcorrError(Exception):
    """Base class for all package errors."""


class ConfigError(PolcorrError, ValueError):
    """Malformed configuration document or invalid parameter set.

    ``violations`` holds every problem found, one message per entry.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [message])


class NumericalError(PolcorrError, ArithmeticError):
    """Degenerate numerics: zero norm, singular fit, unusable grid."""


class GridError(NumericalError):
    """The time grid is too coarse or too short for the requested evaluation."""


class DataError(PolcorrError, ValueError):
    """Bad measured data: CSV parsing problems or curve invariant violations."""
