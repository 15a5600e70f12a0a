"""Key-value records, key-space partitioning and a synthetic record generator.

A record is 100 bytes on disk: a 10-byte big-endian unsigned key followed by
a 90-byte value. Files of records are flat concatenations with no header.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List

import numpy as np

from .errors import InvalidConfigurationError, MalformedDataError, OutOfDomainError

KEY_BYTES = 10
VALUE_BYTES = 90
RECORD_BYTES = KEY_BYTES + VALUE_BYTES
KEY_MAX = (1 << (8 * KEY_BYTES)) - 1


@dataclass(frozen=True, order=True, slots=True)
class Record:
    """One key-value pair. Ordering is by key, then by value bytes."""

    key: int
    value: bytes

    def __post_init__(self):
        if not 0 <= self.key <= KEY_MAX:
            raise OutOfDomainError(f"key {self.key} does not fit in {KEY_BYTES} bytes")
        if len(self.value) != VALUE_BYTES:
            raise MalformedDataError(
                f"value must be exactly {VALUE_BYTES} bytes, got {len(self.value)}"
            )

    def to_bytes(self) -> bytes:
        return self.key.to_bytes(KEY_BYTES, "big") + self.value

    @classmethod
    def from_bytes(cls, data: bytes) -> "Record":
        if len(data) != RECORD_BYTES:
            raise MalformedDataError(f"a record is {RECORD_BYTES} bytes, got {len(data)}")
        return cls(int.from_bytes(data[:KEY_BYTES], "big"), bytes(data[KEY_BYTES:]))


def serialize_records(records: Iterable[Record]) -> bytes:
    return b"".join(rec.to_bytes() for rec in records)


def deserialize_records(data: bytes) -> List[Record]:
    if len(data) % RECORD_BYTES:
        raise MalformedDataError(
            f"record stream length {len(data)} is not a multiple of {RECORD_BYTES}"
        )
    view = memoryview(data)
    return [
        Record(int.from_bytes(view[i : i + KEY_BYTES], "big"), bytes(view[i + KEY_BYTES : i + RECORD_BYTES]))
        for i in range(0, len(data), RECORD_BYTES)
    ]


def read_records(path) -> List[Record]:
    return deserialize_records(Path(path).read_bytes())


def write_records(path, records: Iterable[Record]) -> None:
    Path(path).write_bytes(serialize_records(records))


def generate_records(count: int, seed: int) -> List[Record]:
    """Draw ``count`` records with uniform keys and printable ASCII values.

    The stream is a pure function of ``seed``.
    """
    if count < 0:
        raise InvalidConfigurationError(f"count must be non-negative, got {count}")
    rng = np.random.Generator(np.random.PCG64(seed))
    keys = rng.integers(0, 256, size=(count, KEY_BYTES), dtype=np.uint8)
    values = rng.integers(32, 127, size=(count, VALUE_BYTES), dtype=np.uint8)
    return deserialize_records(np.hstack([keys, values]).tobytes())


@dataclass(frozen=True)
class KeySpace:
    lower: int = 0
    upper: int = KEY_MAX

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidConfigurationError(
                f"key space lower bound {self.lower} exceeds upper bound {self.upper}"
            )

    def __contains__(self, key: int) -> bool:
        return self.lower <= key <= self.upper


@dataclass(frozen=True)
class Partitioning:
    """K ordered key ranges; every range is half-open except the last.

    ``boundaries`` holds K+1 values b_0 < ... < b_K. Partition i (1-based)
    is [b_{i-1}, b_i) for i < K and [b_{K-1}, b_K] for i = K.
    """

    boundaries: tuple

    def __post_init__(self):
        b = self.boundaries
        if len(b) < 2:
            raise InvalidConfigurationError("a partitioning needs at least two boundaries")
        if any(lo >= hi for lo, hi in zip(b, b[1:])):
            raise InvalidConfigurationError("partition boundaries must be strictly increasing")

    @property
    def K(self) -> int:
        return len(self.boundaries) - 1

    @property
    def space(self) -> KeySpace:
        return KeySpace(self.boundaries[0], self.boundaries[-1])

    def bounds(self, index: int) -> tuple:
        """Return ``(low, high, high_inclusive)`` for 1-based partition ``index``."""
        if not 1 <= index <= self.K:
            raise InvalidConfigurationError(f"partition index {index} outside 1..{self.K}")
        return self.boundaries[index - 1], self.boundaries[index], index == self.K

    def __contains__(self, key: int) -> bool:
        return self.boundaries[0] <= key <= self.boundaries[-1]


def partition_boundaries(space: KeySpace, K: int) -> Partitioning:
    """Split ``space`` into ``K`` equal-width ordered partitions.

    Width is measured between boundaries (``upper - lower``); when it does
    not divide evenly the first ``width % K`` partitions are one key wider.
    The last partition additionally owns ``upper`` itself.
    """
    span = space.upper - space.lower
    if K < 1 or span < K:
        raise InvalidConfigurationError(
            f"cannot split a key space of span {span} into {K} partitions"
        )
    q, rem = divmod(span, K)
    boundaries = [space.lower]
    for i in range(1, K + 1):
        boundaries.append(boundaries[-1] + q + (1 if i <= rem else 0))
    return Partitioning(tuple(boundaries))


def partition_of(key: int, partitioning: Partitioning) -> int:
    """Return the 1-based index of the partition holding ``key``."""
    b = partitioning.boundaries
    if not b[0] <= key <= b[-1]:
        raise OutOfDomainError(f"key {key} outside key space [{b[0]}, {b[-1]}]")
    return min(bisect.bisect_right(b, key), len(b) - 1)


def check_records(records) -> List[Record]:
    """Coerce ``records`` into a list of :class:`Record`.

    Accepts a sequence of records, a flat byte string in the 100-byte record
    format, or a ``uint8`` array of shape ``(n, 100)``.
    """
    if isinstance(records, (bytes, bytearray, memoryview)):
        return deserialize_records(bytes(records))
    if isinstance(records, np.ndarray):
        if records.dtype != np.uint8 or records.ndim != 2 or records.shape[1] != RECORD_BYTES:
            raise MalformedDataError(
                f"expected a uint8 array of shape (n, {RECORD_BYTES}), got {records.dtype} {records.shape}"
            )
        return deserialize_records(np.ascontiguousarray(records).tobytes())
    out = list(records)
    for i, rec in enumerate(out):
        if not isinstance(rec, Record):
            raise MalformedDataError(f"element {i} is {type(rec).__name__}, not Record")
    return out

