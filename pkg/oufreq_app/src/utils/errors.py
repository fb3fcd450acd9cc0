"""
Exception types for OUFreq.

Configuration problems derive from ValueError and numerical breakdowns from
ArithmeticError so callers that only know the builtin types still catch them.
"""


class OUFreqError(Exception):
    """Base class for all OUFreq errors."""


class ConfigurationError(OUFreqError, ValueError):
    """Invalid parameters, unknown config keys or out-of-range candidates."""


class NumericalError(OUFreqError, ArithmeticError):
    """A numerical routine produced a non-finite or meaningless result."""


class StiffnessError(NumericalError):
    """Filter or simulator output blew up; the step violates the stiffness guard."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class RootNotFoundError(NumericalError):
    """No sign change was found where a root was expected."""


class IdentifiabilityError(NumericalError):
    """The contrast function does not separate the frequency from its neighbours."""


class PlanAbortedError(OUFreqError):
    """Too many replications of a Monte Carlo plan failed."""


class AcceptanceError(OUFreqError):
    """An acceptance check finished but its criterion was not met."""
