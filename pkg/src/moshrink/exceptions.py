"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A distribution or model parameter lies outside its valid domain."""


class NumericalError(ArithmeticError):
    """A factorization or other numerical routine failed.

    ``pivot`` holds the (zero-based) index of the failing Cholesky pivot
    when one is known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ShapeError(ValueError):
    """Array dimensions do not conform."""


class DegenerateColumnError(ValueError):
    """A column has zero sample variance and cannot be standardized."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class UnsupportedFamilyError(ValueError):
    """The requested operation is undefined for the model family."""


class ChainAbortError(RuntimeError):
    """A non-finite value appeared in the chain state."""

    def __init__(self, message, iteration=None, block=None):
        super().__init__(message)
        self.iteration = iteration
        self.block = block
