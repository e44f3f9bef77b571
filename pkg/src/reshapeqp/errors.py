"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a scalar function."""


class SingularityError(ValueError):
    """Two positions coincide, so the pairwise direction is undefined."""


class RankDeficiencyError(ValueError):
    """An active constraint matrix is (numerically) rank deficient."""


class ConstructionError(RuntimeError):
    """A randomized construction gave up after its retry budget."""


class ConfigError(ValueError):
    """A scenario, basis or model file is malformed."""
