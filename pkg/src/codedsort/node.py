"""Per-worker state machine shared by the simulated and socket transports."""

from __future__ import annotations

import time
from contextlib import contextmanager
from operator import attrgetter
from typing import Dict, Iterable, List, Sequence, Tuple

from .codec import (
    CodedPacket,
    decode_packet,
    deserialize_value,
    encode_group,
    merge_segments,
    serialize_value,
)
from .errors import ConsistencyError
from .mapper import FileAssignment, IntermediateValue, hash_file, retain_relevant
from .placement import PlacementPlan, Subset
from .records import Partitioning, Record
from .transport import Slot, Unicast

STAGES = ("codegen", "map", "pack_encode", "shuffle", "unpack_decode", "reduce")

_sort_key = attrgetter("key", "value")


def reduce_partition(values: Iterable[IntermediateValue], partitioning: Partitioning, partition: int) -> List[Record]:
    """Sort every record of ``partition`` by key, breaking ties on value."""
    lo, hi, closed = partitioning.bounds(partition)
    records = []
    for value in values:
        for rec in value.records:
            if not (lo <= rec.key < hi or (closed and rec.key == hi)):
                raise ConsistencyError(
                    f"record with key {rec.key} from file {value.file} does not belong to partition {partition}"
                )
        records.extend(value.records)
    records.sort(key=_sort_key)
    return records


class Node:
    """One worker: holds its files, maps them, packs or encodes, and reduces."""

    def __init__(self, node: int, plan: PlacementPlan, partitioning: Partitioning):
        self.node = node
        self.plan = plan
        self.partitioning = partitioning
        self.files: Dict[Subset, tuple] = {}
        self.local: Dict[Tuple[Subset, int], IntermediateValue] = {}
        self.inbox: List[Tuple[Slot, bytes]] = []
        self.decoded: List[IntermediateValue] = []
        self.times = dict.fromkeys(STAGES, 0.0)

    @contextmanager
    def timed(self, stage: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.times[stage] += time.perf_counter() - start

    def store(self, file: Subset, records: Sequence[Record]) -> None:
        if self.node not in file:
            raise ConsistencyError(f"file {file} placed on node {self.node} outside its label")
        self.files[file] = tuple(records)

    def map(self) -> None:
        with self.timed("map"):
            for file, records in self.files.items():
                values = hash_file(FileAssignment(file, records), self.partitioning)
                for value in retain_relevant(self.node, file, values):
                    self.local[(file, value.partition)] = value

    def outgoing(self, schedule: Sequence[Slot]) -> Dict[Slot, bytes]:
        """Serialize (uncoded) or encode (coded) every slot this node sends."""
        out = {}
        with self.timed("pack_encode"):
            for slot in schedule:
                if slot.sender != self.node:
                    continue
                if isinstance(slot, Unicast):
                    out[slot] = serialize_value(self._value(slot.file, slot.receiver))
                else:
                    out[slot] = encode_group(slot.group, self.node, self.local).to_bytes(self.plan.K)
        return out

    def receive(self, slot: Slot, payload: bytes) -> None:
        self.inbox.append((slot, payload))

    def unpack(self) -> None:
        with self.timed("unpack_decode"):
            received: Dict[Subset, list] = {}
            for slot, payload in self.inbox:
                if isinstance(slot, Unicast):
                    self.decoded.append(deserialize_value(payload, slot.file, self.node))
                else:
                    packet = CodedPacket.from_bytes(payload, self.plan.K)
                    segment = decode_packet(slot.group, slot.sender, self.node, packet, self.local)
                    received.setdefault(slot.group, []).append(segment)
            for group in sorted(received):
                self.decoded.append(merge_segments(received[group]))
            self.inbox.clear()

    def reduce(self) -> List[Record]:
        with self.timed("reduce"):
            own = [v for (_, j), v in self.local.items() if j == self.node]
            return reduce_partition(own + self.decoded, self.partitioning, self.node)

    def _value(self, file: Subset, partition: int) -> IntermediateValue:
        try:
            return self.local[(file, partition)]
        except KeyError:
            raise ConsistencyError(
                f"node {self.node} asked to send partition {partition} of file {file} it does not hold"
            ) from None

