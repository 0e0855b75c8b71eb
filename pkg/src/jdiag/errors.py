"""Exception hierarchy shared across the package."""


class JdiagError(Exception):
    """Base class for all package errors."""


class MalformedDiagramError(JdiagError):
    """A diagram violates a structural invariant (pairing, valence, skeleton)."""


class KindMismatchError(JdiagError):
    """An operation received a diagram or combo of the wrong space kind."""


class ResourceLimitError(JdiagError):
    """A degree or size cap was exceeded; caps are never downgraded silently."""


class TruncationError(JdiagError):
    """A series or operator truncation is too short for the requested output."""


class InvariantViolationError(JdiagError):
    """An internal consistency check failed (indicates a bug, not bad input)."""


class UnsupportedAlgebraError(JdiagError):
    """The requested Lie algebra is outside the implemented range."""


class CacheError(JdiagError):
    """Base class for cache file problems."""


class CacheVersionError(CacheError):
    """Cache file carries an unknown or outdated format version."""


class CacheIntegrityError(CacheError):
    """Cache file content does not match its recorded hash."""
