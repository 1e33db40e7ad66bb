"""Exception types shared by every module."""


class BathEquilError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(BathEquilError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(BathEquilError, ArithmeticError):
    """A series or quadrature failed to reach its accuracy target.

    Attributes
    ----------
    estimate : float
        Error estimate at the point where the computation gave up.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class ModelError(BathEquilError, RuntimeError):
    """The finite system+bath model is unphysical or could not be solved."""


class StabilityError(DomainError):
    """The system Hamiltonian is not positive definite."""
