"""Exception types raised by the numerical routines."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its real domain."""


class PreconditionError(ValueError):
    """An operation was called on input that violates its precondition."""


class DegenerateOperatorError(ValueError):
    """The operator has an empty support graph or zero spectral radius."""


class ConvergenceError(RuntimeError):
    """An iteration stopped before meeting its tolerance.

    The last residual and iteration count are kept so callers can report
    them (the CLI prints both before exiting with status 2).
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PositivityError(RuntimeError):
    """A vector that must be strictly positive has zero or negative entries."""


class UnderflowError(ArithmeticError):
    """Survival mass at a node is numerically zero."""


class InsufficientSurvivorsError(RuntimeError):
    """A Monte Carlo window contains steps with no surviving paths."""


class InternalConsistencyError(RuntimeError):
    """Two independent routes to the same verdict disagree."""


class SingularTailWarning(RuntimeWarning):
    """An integration band reaches 0 or 1 where the weight 1/(y(1-y)) blows up."""
