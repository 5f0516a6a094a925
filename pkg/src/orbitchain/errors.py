"""Exception hierarchy.

The CLI maps these onto exit codes, so keep the classes distinct.
"""


class OrbitChainError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OrbitChainError, ValueError):
    """An argument violates an operation's contract."""


class NumericalFailure(OrbitChainError, ArithmeticError):
    """A computation produced a non-finite value or a solver did not converge."""


class InconsistencyError(OrbitChainError, RuntimeError):
    """A mathematical identity that must hold was violated.

    Raised for instance when the Bessel-type bound relating probe values to
    the orthonormal tail fails. This never happens on healthy data and signals
    a bug or corrupted input.
    """
