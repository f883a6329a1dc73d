"""Exception hierarchy shared by the library and the command line."""


class RelswapError(Exception):
    """Base class for all errors raised by relswap."""


class UsageError(RelswapError, ValueError):
    """Malformed arguments: wrong labels, missing table entries, bad shapes."""


class DomainError(RelswapError, ValueError):
    """Arguments outside the physical domain (|beta| >= 1, negative rates, ...)."""


class NoBracketError(DomainError):
    """The curve maximum sits on the boundary of the scanned grid."""


class UnidentifiableError(DomainError):
    """The curve is flat, so its peak position carries no information."""


class CurveParseError(UsageError):
    """A curve file could not be parsed."""
