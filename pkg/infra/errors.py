"""
Exception hierarchy shared by every package of the benchmark.
"""

from typing import Optional


class PrecondMomentumError(Exception):
    """Base class for all library errors"""


class RejectedInputError(PrecondMomentumError, ValueError):
    """Input violates an operation's preconditions"""


class DimensionMismatchError(RejectedInputError):
    """Operands have different dimensions"""


class NonFiniteError(RejectedInputError):
    """NaN or Inf entries where only finite values are admitted"""


class InvalidPreconditionerError(PrecondMomentumError, ValueError):
    """A diagonal entry is not strictly positive"""


class StateCorruptionError(PrecondMomentumError):
    """Preconditioner state lost an invariant (e.g. negative entries under quadratic smoothing)"""


class ScheduleError(PrecondMomentumError, ValueError):
    """Smoothing-parameter schedule evaluated outside its domain"""


class CurvatureSourceError(PrecondMomentumError):
    """Curvature information requested from an objective that cannot provide it"""


class NoStrongConvexityError(PrecondMomentumError, ValueError):
    """Objective is not strongly convex (logistic loss without regularization)"""


class ReferenceFailureError(PrecondMomentumError):
    """Reference solver exhausted its budget before reaching the tolerance"""


class InvalidConstantsError(PrecondMomentumError, ValueError):
    """Theory constants out of order (mu > L, e > Gamma, non-positive values)"""


class InvalidWeightsError(PrecondMomentumError, ValueError):
    """Averaging weights undefined because mu*F/(4*Gamma) is outside (0, 1)"""


class DivergenceError(PrecondMomentumError):
    """Iterates or gradients became non-finite"""

    def __init__(self, iteration: int, message: Optional[str] = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite value at iteration {iteration}")


class ParseError(PrecondMomentumError, ValueError):
    """Malformed LibSVM input"""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class EmptyDatasetError(PrecondMomentumError, ValueError):
    """Operation needs at least one sample"""


class CheckPreconditionError(PrecondMomentumError, ValueError):
    """Side conditions of a theory check are violated"""


class ObjectiveMismatchError(PrecondMomentumError, ValueError):
    """Configurations in one comparison do not share an objective"""


class TuningFailureError(PrecondMomentumError):
    """Every step size of a tuning grid diverged"""


class UsageError(PrecondMomentumError, ValueError):
    """Invalid command-line configuration"""
