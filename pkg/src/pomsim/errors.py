"""Exception types shared across the package."""


class PomSimError(Exception):
    """Base class for all pomsim errors."""


class ParameterError(PomSimError, ValueError):
    """A parameter value violates its declared constraints."""


class DomainError(PomSimError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class OrderingError(PomSimError, ValueError):
    """Calibration inputs are not in the required strict order."""


class BracketingError(PomSimError, RuntimeError):
    """A search bracket does not contain a usable optimum."""


class CalibrationError(PomSimError, RuntimeError):
    """A calibration fit failed; carries diagnostic residuals in args."""


class ConfigError(PomSimError, ValueError):
    """An experiment configuration failed validation; message names the field path."""


class InternalError(PomSimError, RuntimeError):
    """Simulator state violated an internal consistency requirement."""
