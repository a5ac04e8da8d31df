"""Exception types shared across the package."""


class DivbarError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(DivbarError, ValueError):
    """Invalid model parameters or state at construction time."""


class DomainError(DivbarError, ValueError):
    """An operation was evaluated outside its mathematical domain."""


class UnsupportedRegimeError(DivbarError):
    """The requested operation is undefined in the current solution regime."""


class SingularityError(DivbarError, ZeroDivisionError):
    """Evaluation hit a removable singularity of the reduced dynamics."""


class SolverFailureError(DivbarError):
    """The free-boundary integration failed before locating the crossing.

    Carries the last abscissa reached and the gap to the lower envelope so
    callers can report a meaningful diagnostic.
    """

    def __init__(self, message, last_q=None, gap=None):
        super().__init__(message)
        self.last_q = last_q
        self.gap = gap


class NoActionError(DivbarError):
    """A dividend was requested at a state inside the no-dividend region."""


class DividendDueError(DivbarError):
    """A control was requested above the barrier; pay the dividend first."""


class ConcavityViolationError(DivbarError):
    """A finite-difference stencil reported a non-negative second derivative."""


class ConfigError(DivbarError, ValueError):
    """A run configuration document is malformed or incomplete."""
