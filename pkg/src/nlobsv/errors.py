class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class TrajectoryGapError(ValueError):
    """A trajectory does not cover the requested time or is not uniformly sampled."""
