"""Exception types shared by the package."""


class TailfieldError(Exception):
    """Base class for errors raised by tailfield."""


class ValidationError(TailfieldError, ValueError):
    """Input violates a documented precondition."""


class DegenerateDataError(TailfieldError):
    """Data carry too little tail information for the requested estimate.

    ``diagnostics`` holds whatever was computed before the failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NumericalError(TailfieldError, ArithmeticError):
    """A numerical routine produced an out-of-tolerance result."""
