"""Exception types raised across the package."""


class CEABCError(Exception):
    """Base class for all package errors."""


# model / integration
class NonpositivePopulation(CEABCError):
    pass


class IntegrationBlowup(CEABCError):
    pass


class NegativeState(CEABCError):
    """A compartment went negative beyond the clamping tolerance."""


# misfit
class ShapeMismatch(CEABCError):
    pass


class ZeroDataNorm(CEABCError):
    pass


# sampling
class TruncationTooTight(CEABCError):
    pass


class ZeroDenominator(CEABCError):
    pass


class DegenerateInterval(UserWarning):
    """Issued (not raised) when a component has lower == upper; the constant is returned."""


# ce / abc
class EmptyElite(CEABCError):
    pass


class AllSamplesFailed(CEABCError):
    pass


class NoAcceptedSamples(CEABCError):
    pass


# ic
class WeightSumInvalid(CEABCError):
    pass


# data
class DataError(CEABCError):
    pass


class ParseError(DataError):
    pass


class InvariantViolation(DataError):
    pass


class GapInDates(DataError):
    pass


class OutOfRange(DataError):
    pass


class ConfigError(CEABCError):
    pass
