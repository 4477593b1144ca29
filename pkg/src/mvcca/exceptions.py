"""Exception and warning types raised by mvcca."""


class MVCCAError(Exception):
    """Base class for all library errors."""


class ParameterDomainError(MVCCAError, ValueError):
    """A distribution or algorithm parameter is outside its admissible domain."""


class DimensionError(MVCCAError, ValueError):
    """Shapes, ranks or ambient dimensions are incompatible."""


class InfeasibleSpectrumError(MVCCAError, ValueError):
    """Target canonical spectra cannot be realised by a 3-view ensemble.

    Attributes
    ----------
    mode : int
        Zero-based index of the first offending canonical mode.
    view : int or None
        Zero-based view whose gain left (0, 1), if applicable.
    """

    def __init__(self, message, mode, view=None):
        super().__init__(message)
        self.mode = mode
        self.view = view


class NumericError(MVCCAError, ArithmeticError):
    """Non-finite input or a numerical procedure that cannot proceed."""


class NearSingularError(NumericError):
    """A covariance is singular below the whitening floor (representation collapse)."""


class InsufficientSamplesError(MVCCAError, ValueError):
    """Too few samples for the requested moment estimate."""


class QuadratureError(MVCCAError, ValueError):
    """The quadrature rule is too small to integrate the requested polynomial exactly."""


class InversionError(NumericError):
    """Safeguarded Newton inversion of a view generator failed to converge."""


class WiringError(MVCCAError, AssertionError):
    """Moments computed from encoded observations differ from source-level moments.

    Attributes
    ----------
    views : list of int
        Zero-based views whose encoded moments deviate.
    """

    def __init__(self, message, views):
        super().__init__(message)
        self.views = list(views)


class ConfigError(MVCCAError, ValueError):
    """An experiment configuration is malformed."""


class PrecisionWarning(UserWarning):
    """A computation ran but its accuracy guarantee is degraded."""
