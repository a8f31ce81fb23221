"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class MinpartError(Exception):
    exit_code = 1


class ValidationError(MinpartError, ValueError):
    """Invalid user input; ``field`` names the offending config path."""

    exit_code = 2

    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class ParseError(ValidationError):
    pass


class InvalidDomain(ValidationError):
    pass


class DuplicatePole(ValidationError):
    pass


class PoleOutsideDomain(ValidationError):
    pass


class TwoPolesInOneHole(ValidationError):
    pass


class NumericalError(MinpartError):
    exit_code = 3


class EmptyGrid(NumericalError):
    pass


class HoleUnresolved(NumericalError):
    pass


class PoleOnEdge(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        super().__init__(message)


class DegenerateProjection(NumericalError):
    pass


class ComponentTooSmall(NumericalError):
    pass


class NonHalfInteger(NumericalError):
    pass


class UnresolvedPartition(MinpartError):
    exit_code = 4
