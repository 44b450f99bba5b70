"""Id-addressed embedding banks and the CEB1 binary file format.

A bank is an immutable, insertion-ordered collection of unit embeddings that
share one dimension. Canonical storage precision is little-endian float32
(matching extractor output precision); all computation upcasts to float64.

CEB1 layout (little-endian throughout):
    bytes 0-3    magic "CEB1"
    bytes 4-7    u32 dim
    bytes 8-15   u64 record count
    byte  16     modality tag (0 unspecified, 1 image, 2 text)
    bytes 17-31  reserved, must be zero
    then per record: u16 id byte length, id bytes (UTF-8), dim x f32
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from . import geometry
from .errors import (
    BadHeader,
    BadMagic,
    BadRecord,
    DimMismatch,
    DuplicateId,
    IoFailure,
    NonFinite,
    NormDrift,
    TrailingData,
    TruncatedFile,
    UnknownId,
)

MAGIC = b"CEB1"
HEADER_SIZE = 32
MAX_ID_BYTES = 256

# A stored vector whose norm deviates from 1 by more than this is corrupt.
NORM_TOLERANCE = 1e-3


class Modality(IntEnum):
    UNSPECIFIED = 0
    IMAGE = 1
    TEXT = 2


class EmbeddingBank:
    """Fixed-dimension, id-addressed unit embeddings (insertion-ordered).

    The float32 matrix is the canonical representation: writing a bank emits
    exactly those bytes, so write -> load is a bit-exact round trip.
    """

    def __init__(self, dim: int, modality: Modality = Modality.UNSPECIFIED):
        if dim < 1:
            raise BadHeader(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.modality = Modality(modality)
        self._ids: list[str] = []
        self._index: dict[str, int] = {}
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    # -- construction --------------------------------------------------

    @classmethod
    def from_vectors(
        cls,
        pairs: Iterable[tuple[str, Sequence[float]]],
        dim: int | None = None,
        modality: Modality = Modality.UNSPECIFIED,
    ) -> "EmbeddingBank":
        """Build a bank from (id, raw vector) pairs, normalizing each vector.

        Vectors are normalized in float64 and stored at float32 precision.
        """
        pairs = list(pairs)
        if dim is None:
            if not pairs:
                raise BadHeader("dim is required for an empty bank")
            dim = len(np.asarray(pairs[0][1]).reshape(-1))
        bank = cls(dim, modality)
        for id_, raw in pairs:
            bank._add(id_, geometry.normalize(raw).astype(np.float32))
        return bank

    def _add(self, id_: str, row_f32: np.ndarray) -> None:
        if not isinstance(id_, str):
            raise BadRecord(f"id must be a string, got {type(id_).__name__}")
        encoded = id_.encode("utf-8")
        if not 1 <= len(encoded) <= MAX_ID_BYTES:
            raise BadRecord(f"id byte length must be in [1, {MAX_ID_BYTES}], got {len(encoded)}")
        if id_ in self._index:
            raise DuplicateId(f"duplicate id: {id_!r}")
        if row_f32.shape != (self.dim,):
            raise DimMismatch(f"vector for {id_!r} has dim {row_f32.shape[0]}, bank dim {self.dim}")
        self._index[id_] = len(self._ids)
        self._ids.append(id_)
        self._rows.append(row_f32)
        self._matrix = None

    # -- access ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    @property
    def matrix(self) -> np.ndarray:
        """Canonical (n, dim) float32 matrix in insertion order."""
        if self._matrix is None:
            if self._rows:
                self._matrix = np.vstack(self._rows)
            else:
                self._matrix = np.empty((0, self.dim), dtype=np.float32)
        return self._matrix

    def index_of(self, id_: str) -> int:
        try:
            return self._index[id_]
        except KeyError:
            raise UnknownId(f"unknown id: {id_!r}") from None

    def get(self, id_: str) -> np.ndarray:
        """Unit embedding for `id_` as float64 (renormalized view).

        The stored float32 row is upcast and renormalized so callers always
        receive a vector satisfying the unit-norm invariant, even for banks
        loaded from files whose norms drift within the 1e-3 tolerance.
        """
        row = self.matrix[self.index_of(id_)].astype(np.float64)
        return geometry.normalize(row)

    def stored(self, id_: str) -> np.ndarray:
        """The raw float32 row exactly as stored/written."""
        return self.matrix[self.index_of(id_)].copy()

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingBank):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.modality == other.modality
            and self._ids == other._ids
            and self.matrix.shape == other.matrix.shape
            and bool(np.array_equal(self.matrix.view(np.uint32), other.matrix.view(np.uint32)))
        )


# -- reports ----------------------------------------------------------------

@dataclass
class BankReport:
    """Per-entry integrity findings. Empty (no errors, no warnings) iff the
    bank satisfies every invariant at the strict 1e-6 norm tolerance."""

    n_entries: int = 0
    dim: int = 0
    max_norm_deviation: float = 0.0
    nan_count: int = 0
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def empty(self) -> bool:
        return not self.errors and not self.warnings

    def to_dict(self) -> dict:
        return {
            "n_entries": self.n_entries,
            "dim": self.dim,
            "max_norm_deviation": self.max_norm_deviation,
            "nan_count": self.nan_count,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
        }


def validate(bank: EmbeddingBank) -> BankReport:
    """Report norm deviations, NaN components, and dim mismatches.

    Deviations above NORM_TOLERANCE and non-finite components are errors;
    deviations in (1e-6, 1e-3] are warnings.
    """
    report = BankReport(n_entries=len(bank), dim=bank.dim)
    m = bank.matrix.astype(np.float64)
    if len(bank) == 0:
        return report
    finite = np.isfinite(m).all(axis=1)
    norms = np.where(finite, np.linalg.norm(np.where(np.isfinite(m), m, 0.0), axis=1), np.nan)
    for i, id_ in enumerate(bank.ids):
        if not finite[i]:
            bad = int(np.count_nonzero(~np.isfinite(m[i])))
            report.nan_count += bad
            report.errors.append(f"{id_}: {bad} non-finite component(s)")
            continue
        dev = abs(float(norms[i]) - 1.0)
        report.max_norm_deviation = max(report.max_norm_deviation, dev)
        if dev > NORM_TOLERANCE:
            report.errors.append(f"{id_}: norm deviates by {dev:.3e} (tolerance {NORM_TOLERANCE:.0e})")
        elif dev > geometry.UNIT_NORM_TOL:
            report.warnings.append(f"{id_}: norm deviates by {dev:.3e}")
    return report


# -- binary format ----------------------------------------------------------

def write_bank(bank: EmbeddingBank, destination: BinaryIO | str | Path) -> None:
    """Serialize `bank` to CEB1 bytes. Writing the same bank twice yields
    byte-identical output."""
    if isinstance(destination, (str, Path)):
        try:
            with open(destination, "wb") as f:
                _write_stream(bank, f)
        except OSError as e:
            raise IoFailure(f"cannot write {destination}: {e}") from e
    else:
        _write_stream(bank, destination)


def _write_stream(bank: EmbeddingBank, out: BinaryIO) -> None:
    header = MAGIC + struct.pack("<IQB", bank.dim, len(bank), int(bank.modality))
    out.write(header + b"\x00" * (HEADER_SIZE - len(header)))
    matrix = bank.matrix
    for i, id_ in enumerate(bank.ids):
        encoded = id_.encode("utf-8")
        out.write(struct.pack("<H", len(encoded)))
        out.write(encoded)
        row = matrix[i]
        if row.dtype.byteorder == ">":  # big-endian storage never happens in practice
            row = row.astype("<f4")
        out.write(row.tobytes())


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise TruncatedFile(f"stream ended while reading {what} ({len(data)}/{n} bytes)")
    return data


def load_bank(source: BinaryIO | bytes | str | Path) -> EmbeddingBank:
    """Parse a CEB1 stream into a bank.

    Structural problems raise MalformedInput subclasses (BadMagic,
    TruncatedFile, BadHeader, BadRecord, TrailingData); content problems
    raise DuplicateId, NonFinite, or NormDrift. Stored components are kept
    verbatim so write(load(x)) reproduces x bit-for-bit.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "rb") as f:
                return load_bank(f.read())
        except OSError as e:
            raise IoFailure(f"cannot read {source}: {e}") from e
    if isinstance(source, bytes):
        source = io.BytesIO(source)

    magic = _read_exact(source, 4, "magic")
    if magic != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {magic!r}")
    rest = _read_exact(source, HEADER_SIZE - 4, "header")
    dim, count, tag = struct.unpack("<IQB", rest[:13])
    if dim < 1:
        raise BadHeader("dim must be >= 1")
    try:
        modality = Modality(tag)
    except ValueError:
        raise BadHeader(f"unknown modality tag {tag}") from None
    if any(rest[13:]):
        raise BadHeader("reserved header bytes must be zero")

    bank = EmbeddingBank(dim, modality)
    vec_bytes = 4 * dim
    for rec in range(count):
        (id_len,) = struct.unpack("<H", _read_exact(source, 2, f"record {rec} id length"))
        if not 1 <= id_len <= MAX_ID_BYTES:
            raise BadRecord(f"record {rec}: id byte length {id_len} out of [1, {MAX_ID_BYTES}]")
        id_bytes = _read_exact(source, id_len, f"record {rec} id")
        try:
            id_ = id_bytes.decode("utf-8")
        except UnicodeDecodeError as e:
            raise BadRecord(f"record {rec}: id is not valid UTF-8") from e
        raw = _read_exact(source, vec_bytes, f"record {rec} vector")
        row = np.frombuffer(raw, dtype="<f4").astype(np.float32, copy=True)

        as64 = row.astype(np.float64)
        if not np.isfinite(as64).all():
            raise NonFinite(f"record {rec} ({id_!r}): non-finite component")
        dev = abs(float(np.linalg.norm(as64)) - 1.0)
        if dev > NORM_TOLERANCE:
            raise NormDrift(
                f"record {rec} ({id_!r}): norm deviates by {dev:.3e} "
                f"(tolerance {NORM_TOLERANCE:.0e})"
            )
        bank._add(id_, row)

    if source.read(1):
        raise TrailingData(f"extra bytes after {count} declared records")
    return bank


def bank_to_bytes(bank: EmbeddingBank) -> bytes:
    buf = io.BytesIO()
    write_bank(bank, buf)
    return buf.getvalue()
