"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An operation received an argument outside its domain."""


class NumericFailure(RuntimeError):
    """An iterative solver failed to meet its stopping contract.

    ``residual`` carries the last measured residual when one exists.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RankDeficient(NumericFailure):
    """A linear system that must be nonsingular is numerically singular."""


class ZFInfeasible(RankDeficient):
    """The stacked effective channel has no right inverse."""


class ConfigError(ValueError):
    """Invalid or unparsable scenario configuration."""
