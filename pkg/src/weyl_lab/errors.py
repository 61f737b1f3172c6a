"""Exception hierarchy shared by all modules.

Each class carries the process exit code the CLI maps it to.
"""


class WeylLabError(Exception):
    exit_code = 1


class ValidationError(WeylLabError, ValueError):
    """Input violates a documented precondition."""

    exit_code = 2


class SingularityError(ValidationError):
    """Gradient of a level function is too small to define a normal."""


class RegularityError(ValidationError):
    """A slice point is (nearly) critical for the projection."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class TransversalityError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class AccuracyError(WeylLabError):
    """Numerical result failed an internal accuracy self-check."""

    exit_code = 3


class TracingError(AccuracyError):
    pass


class CalibrationError(AccuracyError):
    pass


class CapacityError(WeylLabError):
    """Problem size exceeds what this library handles at desk scale."""

    exit_code = 4
