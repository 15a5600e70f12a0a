"""XOR coding of intermediate values inside multicast groups.

Inside a group ``M`` of ``r + 1`` nodes, the value needed by node ``t`` is
``I^t_{M - {t}}``, which every other member of ``M`` computed locally. That
value is split into ``r`` byte segments, one per other member. Node ``k``
sends the XOR of the segments it owns; each receiver cancels the segments it
already knows and is left with its own.

All orderings (segment owners, packet constituents) are ascending node id so
independently computed packets agree bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

from .errors import ConsistencyError, InvalidCallError, MalformedDataError, MalformedPacketError
from .mapper import IntermediateValue
from .placement import Subset, mask_subset, subset_mask
from .records import RECORD_BYTES, deserialize_records, serialize_records

_COUNT = struct.Struct("<I")
_LENGTH = struct.Struct("<I")

LocalValues = Mapping[Tuple[Subset, int], IntermediateValue]


def serialize_value(value: IntermediateValue) -> bytes:
    """Record count (4 bytes, little-endian) followed by the records."""
    return _COUNT.pack(len(value.records)) + serialize_records(value.records)


def deserialize_value(data: bytes, file: Subset, partition: int) -> IntermediateValue:
    if len(data) < _COUNT.size:
        raise MalformedDataError(f"intermediate value needs a {_COUNT.size}-byte header, got {len(data)} bytes")
    (count,) = _COUNT.unpack_from(data)
    body = data[_COUNT.size :]
    if len(body) != count * RECORD_BYTES:
        raise MalformedDataError(
            f"header announces {count} records but body holds {len(body)} bytes"
        )
    return IntermediateValue(file, partition, tuple(deserialize_records(body)))


def xor_bytes(chunks: Sequence[bytes], length: int) -> bytes:
    """XOR ``chunks`` after zero-padding each on the right to ``length``."""
    acc = 0
    for chunk in chunks:
        acc ^= int.from_bytes(chunk, "little")
    return acc.to_bytes(length, "little")


@dataclass(frozen=True)
class Segment:
    source_partition: int
    file: Subset
    owner: int
    payload: bytes


def split_bytes(data: bytes, r: int) -> list:
    """Cut ``data`` into ``r`` contiguous pieces; the first ``len % r`` are one byte longer."""
    q, rem = divmod(len(data), r)
    pieces = []
    start = 0
    for i in range(r):
        stop = start + q + (1 if i < rem else 0)
        pieces.append(data[start:stop])
        start = stop
    return pieces


def split_segments(value: IntermediateValue, r: int, owners: Sequence[int]) -> list:
    """Split the serialized value into ``r`` segments; piece ``i`` goes to ``owners[i]``."""
    if r < 1 or len(owners) != r:
        raise InvalidCallError(f"need exactly r={r} owners, got {list(owners)}")
    pieces = split_bytes(serialize_value(value), r)
    return [Segment(value.partition, value.file, owner, piece) for owner, piece in zip(owners, pieces)]


@dataclass(frozen=True)
class CodedPacket:
    """XOR of the sender's segments in one group.

    ``lengths`` maps each constituent's needy node to the true byte length of
    its segment, so receivers can strip the zero padding.
    """

    group: Subset
    sender: int
    payload: bytes
    lengths: Dict[int, int]

    def to_bytes(self, K: int) -> bytes:
        """Wire layout: group bitmask, sender byte, r lengths, payload."""
        width = mask_width(K)
        header = subset_mask(self.group).to_bytes(width, "little") + bytes([self.sender])
        lengths = b"".join(_LENGTH.pack(self.lengths[t]) for t in sorted(self.lengths))
        return header + lengths + self.payload

    @classmethod
    def from_bytes(cls, data: bytes, K: int) -> "CodedPacket":
        width = mask_width(K)
        if len(data) < width + 1:
            raise MalformedPacketError(f"packet of {len(data)} bytes is shorter than its header")
        group = mask_subset(int.from_bytes(data[:width], "little"))
        sender = data[width]
        if not group or group[-1] > K or sender not in group:
            raise MalformedPacketError(f"bad packet header: group {group}, sender {sender}")
        constituents = [t for t in group if t != sender]
        offset = width + 1
        end = offset + _LENGTH.size * len(constituents)
        if len(data) < end:
            raise MalformedPacketError("packet truncated inside its length table")
        lengths = {
            t: _LENGTH.unpack_from(data, offset + _LENGTH.size * i)[0]
            for i, t in enumerate(constituents)
        }
        payload = bytes(data[end:])
        if max(lengths.values(), default=0) != len(payload):
            raise MalformedPacketError(
                f"payload of {len(payload)} bytes does not match longest segment {max(lengths.values(), default=0)}"
            )
        return cls(group, sender, payload, lengths)


def mask_width(K: int) -> int:
    return max(2, (K + 7) // 8)


def _local(locals: LocalValues, file: Subset, partition: int, node: int) -> IntermediateValue:
    try:
        return locals[(file, partition)]
    except KeyError:
        raise ConsistencyError(
            f"node {node} lacks intermediate value of partition {partition} from file {file}"
        ) from None


def _own_segment(locals: LocalValues, group: Subset, t: int, owner: int, node: int) -> bytes:
    """Segment of ``I^t_{group - {t}}`` owned by ``owner``, computed from local data."""
    file = tuple(m for m in group if m != t)
    value = _local(locals, file, t, node)
    return split_segments(value, len(file), file)[file.index(owner)].payload


def encode_group(group: Subset, node: int, locals: LocalValues) -> CodedPacket:
    """Build the packet ``node`` multicasts to the rest of ``group``."""
    if node not in group:
        raise InvalidCallError(f"node {node} is not a member of group {group}")
    segments = {t: _own_segment(locals, group, t, node, node) for t in group if t != node}
    length = max((len(s) for s in segments.values()), default=0)
    return CodedPacket(
        group, node, xor_bytes(list(segments.values()), length),
        {t: len(s) for t, s in segments.items()},
    )


def decode_packet(group: Subset, sender: int, node: int, packet: CodedPacket, locals: LocalValues) -> Segment:
    """Recover the segment of ``I^node_{group - {node}}`` carried by ``sender``'s packet."""
    if sender == node or sender not in group or node not in group:
        raise InvalidCallError(f"cannot decode packet from {sender} at {node} in group {group}")
    if node not in packet.lengths:
        raise MalformedPacketError(f"packet from {sender} in {group} has no length for node {node}")
    known = [
        _own_segment(locals, group, t, sender, node)
        for t in group
        if t != sender and t != node
    ]
    full = xor_bytes([packet.payload, *known], len(packet.payload))
    true_length = packet.lengths[node]
    if true_length > len(full):
        raise MalformedPacketError(f"length {true_length} exceeds payload of {len(full)} bytes")
    return Segment(node, tuple(m for m in group if m != node), sender, full[:true_length])


def merge_segments(segments: Sequence[Segment]) -> IntermediateValue:
    """Reassemble an intermediate value from its ``r`` decoded segments."""
    if not segments:
        raise MalformedDataError("cannot merge an empty set of segments")
    file = segments[0].file
    partition = segments[0].source_partition
    ordered = sorted(segments, key=lambda s: s.owner)
    owners = tuple(s.owner for s in ordered)
    if owners != tuple(file) or any(s.file != file or s.source_partition != partition for s in ordered):
        raise MalformedDataError(
            f"segments {owners} do not cover file {file} for partition {partition}"
        )
    return deserialize_value(b"".join(s.payload for s in ordered), file, partition)
