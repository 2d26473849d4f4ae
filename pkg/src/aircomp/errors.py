"""Exception hierarchy for the toolkit.

Every error raised by this package derives from :class:`AirCompError`, so
callers can catch the whole family with one clause.  The subclasses also
derive from the closest builtin (ValueError, LookupError, ...) to stay
friendly to generic handlers.
"""


class AirCompError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(AirCompError, ValueError):
    """An argument violates a precondition (wrong size, sign, range, ...)."""


class DegenerateChannelError(AirCompError, ValueError):
    """A channel gain is exactly zero where inversion is required."""


class EmptyAggregationError(AirCompError, ValueError):
    """Every device was excluded; there is nothing left to aggregate."""


class DomainError(AirCompError, ValueError):
    """Data fall outside the valid domain of a nomographic function."""


class FunctionNotFoundError(AirCompError, LookupError):
    """Requested nomographic function name is not registered."""


class InsufficientSubchannelsError(AirCompError, ValueError):
    """Fewer sub-channels than devices in an orthogonal-access allocation."""


class DivergenceError(AirCompError, RuntimeError):
    """A training run exceeded its divergence guard."""


class ConfigError(AirCompError, ValueError):
    """An experiment config is malformed (unknown key, bad type, missing key)."""


class EmptyResultError(AirCompError, ValueError):
    """Asked to export an empty record list."""
