"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, NumericalError -> 3,
partial sweep failure -> 4.
"""


class LisimError(Exception):
    """Base class for all package errors."""


class ConfigError(LisimError):
    """Invalid or inconsistent configuration input."""


class NumericalError(LisimError):
    """Numerical failure (non-finite input, non-PD matrix, no convergence)."""
