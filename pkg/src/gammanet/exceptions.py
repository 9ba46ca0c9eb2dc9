"""Exception hierarchy shared by the solver, the CV driver and the CLI."""


class GammaNetError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GammaNetError, ValueError):
    """Invalid data or hyperparameters supplied by the caller."""


class NumericalError(GammaNetError, ArithmeticError):
    """A likelihood quantity became non-finite.

    Attributes
    ----------
    row : int or None
        Index of the first offending example, when one can be named.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SolverError(GammaNetError, RuntimeError):
    """The safeguard line search could not find a descent step."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
