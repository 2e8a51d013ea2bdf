"""Exception hierarchy.

Every error raised deliberately by the package derives from ``KFDAError`` so
callers (notably the CLI) can map failures to exit codes without catching
unrelated exceptions.
"""


class KFDAError(Exception):
    """Base class for all package errors."""


class InvalidInputError(KFDAError, ValueError):
    """Malformed or out-of-domain input (dimension mismatch, NaN, bad gamma...)."""


class UnsupportedOrderError(InvalidInputError):
    """Bernoulli polynomial / spline order above the supported cap."""


class InvalidAmplitudeError(InvalidInputError):
    """Contamination amplitude would make the alternative density negative."""


class NumericFailureError(KFDAError, ArithmeticError):
    """A factorization or eigensolver failed."""


class DegenerateSpectrumError(NumericFailureError):
    """No positive eigenvalue survived thresholding, so d2 = 0."""


class SingularCovarianceError(NumericFailureError):
    """Pooled coordinate-space covariance is not invertible."""


class DataFormatError(KFDAError, ValueError):
    """Input file missing, unreadable or malformed."""
