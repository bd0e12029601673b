"""Exception hierarchy shared by all modules.

Every error raised on purpose by the library derives from :class:`DomainError`,
so callers (and the command line front end) can separate bad mathematical
input from programming mistakes.
"""


class DomainError(Exception):
    """Base class for errors caused by mathematically invalid input."""


class ParameterOutOfRange(DomainError, ValueError):
    """Family parameters do not induce a polynomial hypergroup."""


class HypergroupViolation(DomainError):
    """A linearization coefficient came out negative beyond tolerance."""


class IndexOutOfRange(DomainError, IndexError):
    """A sequence or table is too short for the requested index."""


class QuadratureUnderresolved(DomainError):
    """The quadrature rule cannot integrate the requested degree exactly."""


class NoDensity(DomainError):
    """The measure has no absolutely continuous part."""


class NonHermitian(DomainError, ValueError):
    """A bimeasure violates weight(x, y) == conj(weight(y, x))."""


class NotPositive(DomainError, ValueError):
    """A bimeasure's atom-weight matrix is not positive semidefinite."""


class NonAtomicUnsupported(DomainError):
    """The operation is only defined for purely atomic bimeasures."""


class MeasureDegenerate(DomainError):
    """The Gram matrix of the measure is singular at some depth.

    ``depth`` is the number of monic polynomials that were completed
    before the degeneracy was detected.
    """

    def __init__(self, message: str, depth: int):
        super().__init__(message)
        self.depth = depth


class InconsistentMatrix(DomainError, ValueError):
    """A matrix does not have the structure induced by a moment sequence."""
