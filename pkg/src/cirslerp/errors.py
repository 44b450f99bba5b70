"""Exception types shared across the engine.

Two broad families matter for exit-code mapping: MalformedInput covers
byte-level/file-format problems (CLI exit 2), everything else derived from
EngineError is a domain error (CLI exit 1).
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class MalformedInput(EngineError):
    """A file or byte stream could not be parsed at the structural level."""


# -- vector / geometry ------------------------------------------------------

class ZeroVector(EngineError):
    """Vector norm is below the normalization threshold."""


class NonFinite(EngineError):
    """A vector contains NaN or Inf components."""


class DimMismatch(EngineError):
    """Operands have different dimensionality."""


class Antipodal(EngineError):
    """Interpolation requested between (near-)antipodal vectors."""


# -- bank file format -------------------------------------------------------

class BadMagic(MalformedInput):
    """Stream does not start with the expected magic bytes."""


class TruncatedFile(MalformedInput):
    """Stream ended before the declared record count was read."""


class BadHeader(MalformedInput):
    """Header fields are structurally invalid."""


class BadRecord(MalformedInput):
    """A record is structurally invalid (id length, encoding)."""


class TrailingData(MalformedInput):
    """Extra bytes remain after the declared record count."""


class DuplicateId(EngineError):
    """The same id appears more than once."""


class NormDrift(EngineError):
    """A stored vector's L2 norm deviates from 1 beyond tolerance."""


class UnknownId(EngineError):
    """Lookup of an id that is not present."""


class IoFailure(EngineError):
    """Underlying I/O operation failed."""


# -- metrics / benchmark ----------------------------------------------------

class QueryMismatch(EngineError):
    """Ranked lists and benchmark instances are not aligned by query_id."""


class MissingSubset(EngineError):
    """A subset protocol was requested but an instance has no subset_ids."""


class BadInstance(EngineError):
    """A benchmark instance violates its invariants."""


# -- trainer ----------------------------------------------------------------

class CountMismatch(EngineError):
    """Paired collections have different lengths."""


class EmptyPairs(EngineError):
    """An operation over pairs received none."""


class BadConfig(EngineError):
    """A configuration value is out of range or inconsistent."""
