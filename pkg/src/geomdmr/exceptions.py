"""Exception types raised across the package."""


class GeomdmrError(Exception):
    """Base class for all package errors."""


class NotPositiveDefiniteError(GeomdmrError, ValueError):
    """A matrix expected to be SPD failed its Cholesky pivot check."""


class EigenConvergenceError(GeomdmrError, RuntimeError):
    """The symmetric eigensolver did not converge."""


class DegenerateDiagonalError(GeomdmrError, ValueError):
    """A diagonal entry required to be positive is zero or negative."""


class LengthMismatchError(GeomdmrError, ValueError):
    """Two vectors that must share a length do not."""


class ZeroVarianceError(GeomdmrError, ValueError):
    """Pearson correlation requested for a constant vector."""


class NotUnitVectorError(GeomdmrError, ValueError):
    """A vector required to lie on the unit sphere does not."""


class NonFiniteResultError(GeomdmrError, ArithmeticError):
    """A computation produced non-finite or out-of-domain intermediates."""


class RankDeficientDesignError(GeomdmrError, ValueError):
    """The design matrix X has (numerically) rank-deficient X'X."""


class DegenerateResidualError(GeomdmrError, ArithmeticError):
    """The residual trace of the centered matrix is zero or negative."""


class InvalidRhoError(GeomdmrError, ValueError):
    """Signal correlation outside the open interval (-1, 1)."""


class DegreesOfFreedomError(GeomdmrError, ValueError):
    """Wishart degrees of freedom below the matrix dimension."""


class ValidationError(GeomdmrError, ValueError):
    """An input object failed a structural validation gate."""


class ParseError(GeomdmrError, ValueError):
    """A file could not be parsed as numeric CSV."""


class EmptyInputError(GeomdmrError, ValueError):
    """An operation received an empty collection."""
