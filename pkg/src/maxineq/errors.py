"""Exception hierarchy shared across the package."""


class MaxineqError(Exception):
    """Base class for all library errors."""


class MissingGridPoint(MaxineqError):
    """A required dyadic time is absent from a path's grid."""


class Overflow(MaxineqError):
    """A computed quantity left the floating-point range."""


class PopulationCap(MaxineqError):
    """A branching simulation exceeded the configured population/event cap."""


class TooManyPaths(MaxineqError):
    """An exact enumeration would visit more paths than the configured cap."""


class NonPositiveA(MaxineqError):
    """The achieving constant a must be strictly positive."""


class NonPositiveAlpha(MaxineqError):
    """Raw maximal-inequality thresholds must be strictly positive."""


class BadExponent(MaxineqError):
    """The moment exponent p must satisfy p > 1."""


class ThresholdBelowStart(MaxineqError):
    """The all-time supremum bound requires a threshold above the start value."""


class PositiveDrift(MaxineqError):
    """The all-time supremum law needs strictly negative drift."""


class NotMonotone(MaxineqError):
    """A transform function was required to be non-decreasing but is not."""


class OutOfDomain(MaxineqError):
    """A value fell outside the interval on which a grid function is defined."""


class InsufficientData(MaxineqError):
    """No bin had enough samples to certify a constant."""


class UnknownMeanDecay(MaxineqError):
    """The convergence checker needs a family with a known mean function."""


class CapTooSmall(MaxineqError):
    """Probability mass escaped beyond the configured truncation cap."""


class ConfigError(MaxineqError):
    """An experiment configuration failed to parse or validate."""
