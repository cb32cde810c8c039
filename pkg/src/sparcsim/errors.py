"""Exception types shared across the package."""


class SparcError(Exception):
    """Base class for all package-specific errors."""


class InsufficientEligible(SparcError):
    """Fewer eligible stakers than the committee size."""


class SchemeMismatch(SparcError):
    """Tier scheme shape disagrees with the committee it is applied to."""


class ZeroTotalStake(SparcError):
    """Pro-rata distribution over a population with zero total stake."""


class InvalidExponent(SparcError):
    """Decay exponent must be strictly positive."""


class InvalidCounts(SparcError):
    """Selection counts out of range (x < 1 or x > S)."""


class RankOutOfRange(SparcError):
    """Staker rank outside 1..population size."""


class DomainError(SparcError):
    """Binomial coefficient arguments out of domain."""


class InadmissibleSplit(SparcError):
    """Sybil split would drop per-instance stake below the minimum."""


class DegenerateInput(SparcError):
    """Empty input or zero total where a distribution statistic needs mass."""


class TooFewStakers(SparcError):
    """Quartile-based statistic requires at least four stakers."""


class NonPositiveStake(SparcError):
    """Log-binned histogram requires strictly positive stakes."""


class InfeasibleSpec(SparcError):
    """Population spec cannot satisfy its own constraints."""


class ParseError(SparcError):
    """Config file could not be parsed."""


class SchemaError(SparcError):
    """Config file parsed but violates the schema."""


class MissingBundle(SparcError):
    """Report bundle path does not exist or holds no run records."""
