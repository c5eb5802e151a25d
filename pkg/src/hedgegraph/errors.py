"""Exception types shared across the package.

Every error raised on a user-facing path derives from :class:`HedgeGraphError`
so the command-line layer can map failures to a single-line message and a
nonzero exit status.
"""


class HedgeGraphError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(HedgeGraphError):
    """A file could not be parsed (bad header, bad cell, bad date)."""


class DataValidationError(HedgeGraphError):
    """Parsed data violates a content rule (duplicate dates, bad prices)."""


class AlignmentError(HedgeGraphError):
    """Series could not be aligned onto a common calendar."""


class DomainError(HedgeGraphError):
    """An operation was called outside its mathematical domain."""


class InfeasibleTargetError(HedgeGraphError):
    """A requested constraint target lies outside the feasible interval."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.feasible_interval = (lo, hi)


class BudgetExceededError(HedgeGraphError):
    """An exhaustive search would exceed its enumeration budget."""


class ConfigError(HedgeGraphError):
    """A config file or flag set is malformed or inconsistent."""
