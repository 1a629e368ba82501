"""Exception types raised across the package."""


class OseenFlowError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(OseenFlowError, ValueError):
    """A field has the wrong shape or contains non-finite samples."""


class SymmetryError(OseenFlowError, ValueError):
    """Spectral coefficients are not conjugate symmetric (field would not be real)."""


class DomainError(OseenFlowError, ValueError):
    """An argument lies outside the domain of an operation."""


class SingularEvaluationError(DomainError):
    """A kernel was evaluated at its singular point."""


class ConfigurationError(OseenFlowError, ValueError):
    """Solver or quadrature configuration cannot satisfy the request."""


class QuadratureError(OseenFlowError, RuntimeError):
    """A quadrature failed its own adequacy check (tail, truncation, accuracy)."""


class CatalogError(OseenFlowError, KeyError):
    """Unknown name in a catalog of analytic families."""


class ContractionError(OseenFlowError, RuntimeError):
    """Picard iteration failed to contract on a window.

    Attributes
    ----------
    ratio : float
        Last measured ratio ``d_{n+1} / d_n`` of successive iteration deltas.
    window : tuple of float
        ``(t_start, t_end)`` of the failing window.
    """

    def __init__(self, message, ratio=float("nan"), window=(float("nan"), float("nan"))):
        super().__init__(message)
        self.ratio = ratio
        self.window = window
