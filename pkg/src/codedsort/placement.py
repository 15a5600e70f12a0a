"""File placement and multicast-group generation.

Node subsets are plain ascending tuples of 1-based node ids. Every node can
derive the same plan from ``(K, r)`` alone, so nothing here is random.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Sequence, Tuple

from .errors import InvalidConfigurationError

Subset = Tuple[int, ...]


def enumerate_subsets(K: int, size: int) -> List[Subset]:
    """All ``size``-subsets of ``{1..K}`` in lexicographic order."""
    if not 1 <= size <= K:
        raise InvalidConfigurationError(f"subset size {size} outside 1..{K}")
    return list(itertools.combinations(range(1, K + 1), size))


def rank_subset(subset: Sequence[int], K: int) -> int:
    """Position of ``subset`` in :func:`enumerate_subsets` order."""
    size = len(subset)
    rank = 0
    prev = 0
    for i, member in enumerate(subset):
        if not prev < member <= K:
            raise InvalidConfigurationError(f"{tuple(subset)} is not an ascending subset of 1..{K}")
        for skipped in range(prev + 1, member):
            rank += comb(K - skipped, size - i - 1)
        prev = member
    return rank


def unrank_subset(rank: int, K: int, size: int) -> Subset:
    total = comb(K, size)
    if not 0 <= rank < total:
        raise InvalidConfigurationError(f"rank {rank} outside 0..{total - 1}")
    members = []
    candidate = 1
    for i in range(size):
        while True:
            block = comb(K - candidate, size - i - 1)
            if rank < block:
                break
            rank -= block
            candidate += 1
        members.append(candidate)
        candidate += 1
    return tuple(members)


def subset_mask(subset: Sequence[int]) -> int:
    """Bitmask with bit ``k - 1`` set for every member ``k``."""
    mask = 0
    for k in subset:
        mask |= 1 << (k - 1)
    return mask


def mask_subset(mask: int) -> Subset:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@dataclass(frozen=True)
class PlacementPlan:
    """Which node stores which file, plus the multicast groups.

    ``multiplicity`` is the number of equal-sized input files folded into one
    subset label. It has no effect on data movement, only on unit accounting
    (one file-level intermediate value is one unit).
    """

    K: int
    r: int
    files: Tuple[Subset, ...]
    groups: Tuple[Subset, ...]
    node_files: Dict[int, Tuple[int, ...]] = field(compare=False)
    multiplicity: int = 1

    @property
    def n_files(self) -> int:
        return self.multiplicity * len(self.files)

    def files_of(self, node: int) -> List[Subset]:
        return [self.files[i] for i in self.node_files[node]]

    def groups_of(self, node: int) -> List[Subset]:
        return [g for g in self.groups if node in g]


def _node_files(K: int, files: Sequence[Subset]) -> Dict[int, Tuple[int, ...]]:
    return {k: tuple(i for i, s in enumerate(files) if k in s) for k in range(1, K + 1)}


def build_plan(K: int, r: int, multiplicity: int = 1) -> PlacementPlan:
    """Redundant placement: file ``S`` (``|S| = r``) lives on every node of ``S``."""
    if not 1 <= r <= K - 1:
        raise InvalidConfigurationError(f"redundancy r={r} outside 1..{K - 1} for K={K}")
    if multiplicity < 1:
        raise InvalidConfigurationError(f"multiplicity must be positive, got {multiplicity}")
    files = tuple(enumerate_subsets(K, r))
    groups = tuple(enumerate_subsets(K, r + 1))
    return PlacementPlan(K, r, files, groups, _node_files(K, files), multiplicity)


def uncoded_plan(K: int, multiplicity: int = 1) -> PlacementPlan:
    """One file per node, no multicast groups."""
    if K < 1:
        raise InvalidConfigurationError(f"need at least one node, got K={K}")
    if multiplicity < 1:
        raise InvalidConfigurationError(f"multiplicity must be positive, got {multiplicity}")
    files = tuple((k,) for k in range(1, K + 1))
    return PlacementPlan(K, 1, files, (), _node_files(K, files), multiplicity)


def split_input(records: Sequence, n_files: int) -> List[list]:
    """Cut ``records`` into ``n_files`` contiguous chunks, longest first."""
    if n_files < 1:
        raise InvalidConfigurationError(f"n_files must be positive, got {n_files}")
    q, rem = divmod(len(records), n_files)
    chunks = []
    start = 0
    for i in range(n_files):
        stop = start + q + (1 if i < rem else 0)
        chunks.append(list(records[start:stop]))
        start = stop
    return chunks
