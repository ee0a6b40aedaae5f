"""Exception hierarchy shared by all modules."""


class DeconvError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(DeconvError, ValueError):
    """Invalid parameters (kernel exponent, step, bracket, ...)."""


class DomainError(DeconvError, ValueError):
    """Evaluation point outside the signal's interval."""


class MetricError(DeconvError, ValueError):
    """A metric is undefined for the given inputs."""


class StepTooLargeError(ConfigError):
    """Difference step does not fit inside the interval (h >= T/2)."""


class SingularSystemError(DeconvError, ArithmeticError):
    """Triangular system with a (near) zero pivot."""


class NoCrossingError(DeconvError, ArithmeticError):
    """Discrepancy never crosses its target inside the expanded bracket."""


class NumericError(DeconvError, ArithmeticError):
    """Non-finite values reached a numerical routine."""
