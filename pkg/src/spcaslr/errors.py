"""Exception types raised by the package."""


class SpcaSlrError(Exception):
    """Base class for all package errors."""


class ParameterError(SpcaSlrError, ValueError):
    """An argument is outside its documented domain."""


class SingularityError(SpcaSlrError, ArithmeticError):
    """A matrix that must be inverted is singular."""


class DegenerateInputError(SpcaSlrError, ValueError):
    """The data cannot support the requested transform (e.g. a zero-variance column)."""


class CapacityError(SpcaSlrError):
    """An exhaustive routine was asked to enumerate too many candidates."""


class NumericalError(SpcaSlrError, ArithmeticError):
    """An iterative routine failed to produce a usable answer."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
