"""Shuffle scheduling, traffic accounting and the simulated channel.

Shuffles are strictly serial: one sender transmits at a time, in schedule
order. A multicast is charged once in the ledger no matter how many nodes
receive it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple, Union

from .errors import InvalidConfigurationError, TransmissionError
from .placement import PlacementPlan, Subset, uncoded_plan


class Unicast(NamedTuple):
    """Send the intermediate value of ``file`` for partition ``receiver``."""

    sender: int
    receiver: int
    file: Subset
    units: Fraction = Fraction(1)

    @property
    def receivers(self) -> Tuple[int, ...]:
        return (self.receiver,)


class Multicast(NamedTuple):
    sender: int
    group: Subset
    units: Fraction = Fraction(1)

    @property
    def receivers(self) -> Tuple[int, ...]:
        return tuple(m for m in self.group if m != self.sender)


Slot = Union[Unicast, Multicast]


def schedule_uncoded(K_or_plan: Union[int, PlacementPlan]) -> List[Unicast]:
    """Serial unicast schedule.

    Given ``K``, this is plain TeraSort: node 1 sends to 2, 3, ... back to
    back, then node 2, and so on. Given a redundant plan, each missing value
    ``I^k_S`` is sent once by the smallest member of ``S``.
    """
    plan = uncoded_plan(K_or_plan) if isinstance(K_or_plan, int) else K_or_plan
    unit = Fraction(plan.multiplicity)
    slots = []
    for sender in range(1, plan.K + 1):
        owned = [s for s in plan.files_of(sender) if s[0] == sender]
        for receiver in range(1, plan.K + 1):
            for file in owned:
                if receiver not in file:
                    slots.append(Unicast(sender, receiver, file, unit))
    return slots


def schedule_coded(plan: PlacementPlan) -> List[Multicast]:
    """Every node multicasts once in each of its groups, senders in ascending order."""
    unit = Fraction(plan.multiplicity, plan.r)
    return [
        Multicast(sender, group, unit)
        for sender in range(1, plan.K + 1)
        for group in plan.groups_of(sender)
    ]


@dataclass(frozen=True)
class CostModel:
    """Serial link cost: ``bytes / bandwidth * (1 + alpha * log2(receivers))``."""

    bandwidth: float = 12.5e6
    alpha: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidConfigurationError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.alpha < 0:
            raise InvalidConfigurationError(f"alpha must be non-negative, got {self.alpha}")

    def time(self, n_bytes: int, n_receivers: int) -> float:
        overhead = 1.0 + self.alpha * math.log2(n_receivers) if n_receivers > 1 else 1.0
        return n_bytes / self.bandwidth * overhead


class LedgerEntry(NamedTuple):
    sender: int
    receivers: Tuple[int, ...]
    bytes: int
    units: Fraction


@dataclass
class ShuffleLedger:
    entries: List[LedgerEntry] = field(default_factory=list)

    def record(self, sender: int, receivers: Sequence[int], n_bytes: int, units) -> None:
        self.entries.append(LedgerEntry(sender, tuple(receivers), n_bytes, Fraction(units)))

    @property
    def total_bytes(self) -> int:
        return sum(e.bytes for e in self.entries)

    @property
    def total_units(self) -> Fraction:
        return sum((e.units for e in self.entries), Fraction(0))

    def shuffle_time(self, cost: CostModel) -> float:
        return math.fsum(cost.time(e.bytes, len(e.receivers)) for e in self.entries)


class TransmitResult(NamedTuple):
    delivered: Dict[int, List[Tuple[Slot, bytes]]]
    ledger: ShuffleLedger
    shuffle_time: float


def transmit(schedule: Sequence[Slot], payloads: Mapping[Slot, bytes], cost: CostModel) -> TransmitResult:
    """Deliver every slot's payload on a single simulated timeline."""
    ledger = ShuffleLedger()
    delivered: Dict[int, List[Tuple[Slot, bytes]]] = {}
    for index, slot in enumerate(schedule):
        try:
            payload = payloads[slot]
        except KeyError:
            raise TransmissionError("no payload for scheduled transmission", slot=index) from None
        for receiver in slot.receivers:
            delivered.setdefault(receiver, []).append((slot, payload))
        ledger.record(slot.sender, slot.receivers, len(payload), slot.units)
    return TransmitResult(delivered, ledger, ledger.shuffle_time(cost))
