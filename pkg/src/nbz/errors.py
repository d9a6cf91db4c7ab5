"""Exception hierarchy shared across the toolkit."""


class NbzError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(NbzError):
    """Input data violates an ingestion invariant (shape, finiteness)."""


class DegenerateRangeError(NbzError):
    """A value-range-relative quantity was requested on a zero-range field."""


class BoundTooSmallError(NbzError):
    """Error bound too small for the magnitude of the data."""


class EncodeError(NbzError):
    """A value cannot be represented by the selected coding scheme."""


class DecodeError(NbzError):
    """Compressed payload is malformed, truncated, or inconsistent."""


class ArchiveError(NbzError):
    """Archive container is unreadable: bad magic, version, or checksum."""
