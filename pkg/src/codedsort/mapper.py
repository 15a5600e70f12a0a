"""Map stage: bucket a file's records by key partition."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import List, Sequence

from .errors import InvalidCallError, OutOfDomainError
from .placement import Subset
from .records import Partitioning, Record


@dataclass(frozen=True)
class FileAssignment:
    file: Subset
    records: tuple


@dataclass(frozen=True)
class IntermediateValue:
    """Records of ``file`` whose keys fall in ``partition``, in file order."""

    file: Subset
    partition: int
    records: tuple

    def __len__(self):
        return len(self.records)


def hash_file(file: FileAssignment, partitioning: Partitioning) -> List[IntermediateValue]:
    """Split a file into ``K`` intermediate values, one per partition.

    Bucketing is stable, so every node mapping the same file produces
    byte-identical intermediate values.
    """
    b = partitioning.boundaries
    lo, hi, K = b[0], b[-1], partitioning.K
    buckets: List[List[Record]] = [[] for _ in range(K)]
    for i, rec in enumerate(file.records):
        if not lo <= rec.key <= hi:
            raise OutOfDomainError(
                f"record {i} of file {file.file} has key {rec.key} outside [{lo}, {hi}]"
            )
        buckets[min(bisect.bisect_right(b, rec.key), K) - 1].append(rec)
    return [IntermediateValue(file.file, j + 1, tuple(recs)) for j, recs in enumerate(buckets)]


def retain_relevant(node: int, file: Subset, values: Sequence[IntermediateValue]) -> List[IntermediateValue]:
    """Keep the node's own partition and every partition owned outside ``file``.

    Values for the other members of ``file`` are dropped: those nodes mapped
    the same file and already hold them.
    """
    if node not in file:
        raise InvalidCallError(f"node {node} does not store file {file}")
    return [v for v in values if v.partition == node or v.partition not in file]
