"""Random sequences indexed by polynomial hypergroups.

Submodules
----------
polysys     recurrence coefficients, evaluation and quadrature of the built-in families
hyperconv   linearization coefficients, Haar weights and translation
measures    spectral measures, bimeasures and their moments
opseq       modified Chebyshev algorithm and connection coefficients
kernels     covariance kernels and stationarity checks
sequences   sample path generators
estimate    periodograms and spectral density estimates
predict     linear prediction errors and determinism diagnostics
structmat   structured Gram matrices and their fast factorization
cli         command-line front end
"""

from .errors import (
    DomainError,
    HypergroupViolation,
    InconsistentMatrix,
    IndexOutOfRange,
    MeasureDegenerate,
    NoDensity,
    NonAtomicUnsupported,
    NonHermitian,
    NotPositive,
    ParameterOutOfRange,
    QuadratureUnderresolved,
)
from .polysys import (
    PolynomialSystem,
    bernstein_szego,
    cartier_dunau,
    chebyshev_first,
    chebyshev_second,
    custom,
    from_descriptor,
    jacobi,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "HypergroupViolation",
    "InconsistentMatrix",
    "IndexOutOfRange",
    "MeasureDegenerate",
    "NoDensity",
    "NonAtomicUnsupported",
    "NonHermitian",
    "NotPositive",
    "ParameterOutOfRange",
    "QuadratureUnderresolved",
    "PolynomialSystem",
    "bernstein_szego",
    "cartier_dunau",
    "chebyshev_first",
    "chebyshev_second",
    "custom",
    "from_descriptor",
    "jacobi",
]
