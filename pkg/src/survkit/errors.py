"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 2, data errors
exit 3, numerical failures exit 4.
"""


class SurvkitError(Exception):
    """Base class for all toolkit errors."""


class UsageError(SurvkitError):
    """Bad configuration or command-line usage."""


class DataError(SurvkitError):
    """Input data violates a contract (missing columns, bad labels, ...)."""


class NumericError(SurvkitError):
    """A numerical procedure failed."""


class ConvergenceError(NumericError):
    """Iterative fit did not converge; carries the last iterate."""

    def __init__(self, message, last_beta=None, iterations=None):
        super().__init__(message)
        self.last_beta = last_beta
        self.iterations = iterations


class SingularMatrixError(NumericError):
    """Information matrix could not be inverted (collinear features)."""
