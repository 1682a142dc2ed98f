"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model parameters or an infeasible state sequence."""


class NumericGuardError(RuntimeError):
    """A numerical or combinatorial safety guard was tripped."""


class ConfigError(ValueError):
    """Malformed experiment configuration or input file."""
