"""Exception types raised across the package."""


class NLWaveError(Exception):
    """Base class for all package errors."""


class GridTooSmallError(NLWaveError, ValueError):
    pass


class CFLError(NLWaveError, ValueError):
    """Time step too large for the explicit scheme."""


class FieldFormatError(NLWaveError, ValueError):
    """Malformed or truncated NLWF file."""


class NumericalFailure(NLWaveError, RuntimeError):
    """A time stepper produced non-finite values or blew up."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ValidityRadiusError(NLWaveError, ValueError):
    """Gradient left the region where the remainder model is valid."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NonContractionError(NumericalFailure):
    """Picard iterates failed to contract."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class ResolutionError(NLWaveError, ValueError):
    pass


class HaloError(NLWaveError, ValueError):
    """Characteristic left the padded region."""


class UnderdeterminedError(NLWaveError, ValueError):
    pass


class ConfigError(NLWaveError, ValueError):
    pass


class ExponentOverflowError(NLWaveError, OverflowError):
    """Exponential weight of a semiclassical probe is not representable."""
