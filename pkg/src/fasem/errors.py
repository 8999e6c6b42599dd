"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid system parameters or experiment config file."""


class InfeasibleSegmentError(RuntimeError):
    """A load segment admits no transmit power under the current budget."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap without meeting its threshold."""
