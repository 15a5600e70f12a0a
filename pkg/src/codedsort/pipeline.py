"""End-to-end TeraSort and CodedTeraSort drivers."""

from __future__ import annotations

import hashlib
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .errors import InvalidConfigurationError
from .metrics import LoadReport, communication_load
from .node import STAGES, Node
from .placement import PlacementPlan, Subset, build_plan, split_input, uncoded_plan
from .records import KeySpace, Partitioning, Record, partition_boundaries
from .transport import CostModel, ShuffleLedger, schedule_coded, schedule_uncoded, transmit

log = logging.getLogger(__name__)

TRANSPORTS = ("sim", "socket")


@dataclass
class StageTimes:
    codegen: float = 0.0
    map: float = 0.0
    pack_encode: float = 0.0
    shuffle: float = 0.0
    unpack_decode: float = 0.0
    reduce: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum(getattr(self, s) for s in STAGES)

    def as_dict(self) -> Dict[str, float]:
        return {s: getattr(self, s) for s in STAGES}


@dataclass
class SortedOutput:
    """Per-node sorted partitions; node ``k`` holds ``partitions[k - 1]``."""

    partitions: List[List[Record]]

    def records(self) -> List[Record]:
        return [rec for part in self.partitions for rec in part]

    def __len__(self):
        return sum(len(p) for p in self.partitions)


@dataclass
class SortResult:
    output: SortedOutput
    times: StageTimes
    load: LoadReport
    ledger: ShuffleLedger
    plan: PlacementPlan
    digests: List[str] = field(default_factory=list)
    shuffle_wall: Optional[float] = None

    def __iter__(self):
        # (output, times, load) unpacking
        return iter((self.output, self.times, self.load))


def default_partitioning(K: int) -> Partitioning:
    return partition_boundaries(KeySpace(), K)


def place_files(records: Sequence[Record], plan: PlacementPlan) -> Dict[Subset, List[Record]]:
    """Cut the input into ``plan.n_files`` chunks and fold them onto subset labels."""
    chunks = split_input(records, plan.n_files)
    m = plan.multiplicity
    return {
        label: [rec for chunk in chunks[i * m : (i + 1) * m] for rec in chunk]
        for i, label in enumerate(plan.files)
    }


def _digest(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


def _execute(records, plan, coded, partitioning, cost, transport, port_base, codegen_time) -> SortResult:
    if transport not in TRANSPORTS:
        raise InvalidConfigurationError(f"unknown transport {transport!r}; expected one of {TRANSPORTS}")
    if partitioning.K != plan.K:
        raise InvalidConfigurationError(f"partitioning has {partitioning.K} ranges for K={plan.K} nodes")
    files = place_files(records, plan)
    schedule = schedule_coded(plan) if coded else schedule_uncoded(plan)

    if transport == "socket":
        from .net import run_socket_job

        job = run_socket_job(plan, coded, partitioning, files, schedule, port_base=port_base)
        partitions, node_times, ledger, digests = job.partitions, job.node_times, job.ledger, job.digests
        shuffle_wall = job.shuffle_wall
    else:
        nodes = [Node(k, plan, partitioning) for k in range(1, plan.K + 1)]
        for node in nodes:
            for label in plan.files_of(node.node):
                node.store(label, files[label])
        for node in nodes:
            node.map()
        payloads = {}
        for node in nodes:
            payloads.update(node.outgoing(schedule))
        start = time.perf_counter()
        delivered, ledger, _ = transmit(schedule, payloads, cost)
        for k, items in delivered.items():
            for slot, payload in items:
                nodes[k - 1].receive(slot, payload)
        shuffle_wall = time.perf_counter() - start
        digests = [_digest(payloads[slot]) for slot in schedule]
        for node in nodes:
            node.unpack()
        partitions = [node.reduce() for node in nodes]
        node_times = [node.times for node in nodes]

    # nodes run each stage concurrently, so a stage lasts as long as its slowest node
    times = StageTimes(**{s: max((t[s] for t in node_times), default=0.0) for s in STAGES})
    times.codegen = codegen_time
    times.shuffle = ledger.shuffle_time(cost)
    load = communication_load(ledger, Q=plan.K, N=plan.n_files, r=plan.r)
    return SortResult(SortedOutput(partitions), times, load, ledger, plan, digests, shuffle_wall)


def run_terasort(
    records: Sequence[Record],
    K: int,
    cost: Optional[CostModel] = None,
    transport: str = "sim",
    *,
    redundancy: int = 1,
    multiplicity: int = 1,
    partitioning: Optional[Partitioning] = None,
    port_base: Optional[int] = None,
) -> SortResult:
    """Sort with unicast shuffling.

    ``redundancy > 1`` keeps the redundant file placement but shuffles
    uncoded, which isolates the gain of coding from that of extra local data.
    """
    if K < 1:
        raise InvalidConfigurationError(f"need at least one node, got K={K}")
    if redundancy == 1:
        plan = uncoded_plan(K, multiplicity)
    else:
        plan = build_plan(K, redundancy, multiplicity)
    return _execute(
        records, plan, False, partitioning or default_partitioning(K), cost or CostModel(),
        transport, port_base, 0.0,
    )


def run_coded_terasort(
    records: Sequence[Record],
    K: int,
    r: int,
    cost: Optional[CostModel] = None,
    transport: str = "sim",
    *,
    multiplicity: int = 1,
    partitioning: Optional[Partitioning] = None,
    port_base: Optional[int] = None,
) -> SortResult:
    """Sort with redundant placement and XOR-coded multicast shuffling."""
    start = time.perf_counter()
    plan = build_plan(K, r, multiplicity)
    codegen_time = time.perf_counter() - start
    return _execute(
        records, plan, True, partitioning or default_partitioning(K), cost or CostModel(),
        transport, port_base, codegen_time,
    )


def verify_output(output: SortedOutput, records: Sequence[Record]) -> bool:
    """True iff the concatenated output is key-ordered and a permutation of ``records``."""
    flat = output.records()
    for i in range(1, len(flat)):
        if flat[i - 1].key > flat[i].key:
            log.warning("output out of order at index %d (key %d > %d)", i, flat[i - 1].key, flat[i].key)
            return False
    if len(flat) != len(records) or Counter(flat) != Counter(records):
        first = next(
            (i for i, (a, b) in enumerate(zip(flat, sorted(records))) if a != b),
            min(len(flat), len(records)),
        )
        log.warning("output is not a permutation of the input (first mismatch at index %d)", first)
        return False
    return True
