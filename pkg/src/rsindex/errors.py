"""Exception hierarchy shared by every module of the package."""


class RankSelectError(Exception):
    """Base class for all errors raised by rsindex."""


class UsageError(RankSelectError, ValueError):
    """An argument is outside the range an operation accepts."""


class ConfigurationError(RankSelectError, ValueError):
    """Parameters (ell, L, table budget, ...) are inconsistent or out of range."""


class QueryDomainError(UsageError):
    """rank(j) or select(k) was asked outside its domain."""


class ConstructionError(RankSelectError):
    """The input stream does not match what the build was told to expect."""


class EncodingError(RankSelectError, ValueError):
    """A small set or multiset cannot be packed into the requested key format."""


class ProtocolError(RankSelectError):
    """A construction process received a stream that violates its protocol."""


class InvariantViolation(RankSelectError, AssertionError):
    """An internal invariant failed; indicates a bug, never bad user input."""


class ContainerError(RankSelectError):
    """A serialized index is truncated, corrupted or of an unknown version."""
