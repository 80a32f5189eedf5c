"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid scenario, network or controller configuration.

    Raised at construction/load time, never mid-simulation; the CLI maps it
    to a distinct exit code from runtime failures.
    """
