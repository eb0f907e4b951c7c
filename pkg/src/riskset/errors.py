"""Exception taxonomy shared across the toolkit."""


class RisksetError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(RisksetError):
    """Array shapes or lengths do not line up."""


class ValidationError(RisksetError):
    """Input data violates an invariant (non-finite values, bad labels, ...)."""


class ConfigError(RisksetError):
    """Inconsistent or out-of-range configuration."""


class DomainError(RisksetError):
    """A numeric argument is outside the mathematical domain of an operation."""


class ResourceError(RisksetError):
    """A size guard was exceeded (e.g. the exhaustive grid would be too large)."""


class DegenerateStatisticsError(RisksetError):
    """A statistic is undefined because its inputs have no variation."""


class ReportError(RisksetError):
    """A report or curve could not be assembled from the available points."""
