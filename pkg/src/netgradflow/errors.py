"""Exception types raised by the solver."""


class NetGradFlowError(Exception):
    """Base class for every error raised by this package."""


class DomainViolation(NetGradFlowError, ValueError):
    """An entropy second derivative was evaluated outside its admissible domain."""


class NonPositiveDiffusivity(NetGradFlowError, ValueError):
    """A diffusivity field contains a value that is not strictly positive."""


class SingularStage(NetGradFlowError, ArithmeticError):
    """An implicit stage denominator vanished; the time step is too large."""


class NotPointwise(NetGradFlowError, TypeError):
    """A delta source has no pointwise value."""


class ZeroReference(NetGradFlowError, ZeroDivisionError):
    """A relative error was requested against a reference of zero norm."""


class ConfigError(NetGradFlowError, ValueError):
    """A run configuration is malformed or inconsistent."""
