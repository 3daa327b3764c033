"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
configuration problems (bad parameters, bad files) and numerical problems
(quantities that cannot be computed for otherwise valid input).
"""


class BiphotonError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BiphotonError, ValueError):
    """Inconsistent or unparseable configuration."""


class InvalidParameterError(ConfigurationError):
    """A physical parameter is outside its allowed range."""


class FibreAbsentError(InvalidParameterError):
    """Dispersed-amplitude path requested with k''*z == 0."""


class NumericalError(BiphotonError, ArithmeticError):
    """A derived quantity is undefined for the given data."""


class ResolutionError(NumericalError):
    """Grid too coarse for the requested operation."""


class UndefinedFwhmError(NumericalError):
    pass


class UndefinedVisibilityError(NumericalError):
    pass


class NormalizationError(NumericalError):
    """Curve cannot be normalized to a probability density."""


class UnderdeterminedError(NumericalError):
    """Measured peak carries no information beyond the jitter response."""


class NoConvergenceError(NumericalError):
    pass
