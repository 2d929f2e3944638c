"""Exception types raised across the package.

Everything derives from :class:`BevkitError` so callers can catch the
package's failures with a single except clause.  The CLI maps these onto
process exit codes: data-shaped failures exit 3, numeric failures exit 4.
"""


class BevkitError(Exception):
    """Base class for all errors raised by this package."""


# geometry
class BehindCamera(BevkitError):
    """A point sits at or behind the camera's principal plane."""


class NonPositiveDepth(BevkitError):
    """A depth value that must be positive is zero or negative."""


# shapes, ranges and grid specs
class OutOfRange(BevkitError):
    """A value falls outside the range a contract requires."""


class ShapeMismatch(BevkitError):
    """Array dimensions disagree with what an operation requires."""


class SpecMismatch(BevkitError):
    """Two grids built on different specs were combined."""


class InvalidSpec(BevkitError):
    """A configuration object violates its own invariants."""


# temporal bookkeeping
class UnknownTimestamp(BevkitError):
    """A timestamp is absent from the ego track."""


class MissingObservation(BevkitError):
    """An object lacks an observation at a required frame."""


class MissingState(BevkitError):
    """An object lacks a ground-truth state at a required frame."""


# numerics
class NonFiniteInput(BevkitError):
    """An input contains NaN or infinity where finite values are required."""


# serialization
class IoFailure(BevkitError):
    """An underlying file operation failed."""


class ChecksumMismatch(BevkitError):
    """Stored bytes do not match their recorded checksum."""


class UnsupportedVersion(BevkitError):
    """A file declares a format version newer than this package reads."""


class CorruptHeader(BevkitError):
    """A binary header is malformed or internally inconsistent."""
