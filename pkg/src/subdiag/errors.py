"""Exception hierarchy.

``PreconditionError`` subclasses signal a violated precondition on an
otherwise well-formed input; the CLI maps them to exit code 3.
"""


class SubdiagError(Exception):
    pass


class DimensionError(SubdiagError, ValueError):
    pass


class PreconditionError(SubdiagError, ValueError):
    pass


class NotHermitianError(PreconditionError):
    pass


class NotPositiveError(PreconditionError):
    pass


class SingularMatrixError(PreconditionError):
    pass


class NotPartialIsometryError(PreconditionError):
    pass


class NotInAlgebraError(PreconditionError):
    pass


class NotFactorableError(PreconditionError):
    """Raised when Delta(f) is at or below the determinant floor."""


class ExponentMismatchError(PreconditionError):
    pass


class NotInvariantError(PreconditionError):
    pass


class IllPosedAlgebraError(PreconditionError):
    """The descriptor does not define a usable tracial subalgebra."""


class NotSubdiagonalError(PreconditionError):
    """A structural identity that holds for subdiagonal algebras failed.

    Carries the offending residual so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
