from __future__ import annotations

import enum
from dataclasses import dataclass


class EventKind(enum.IntEnum):
    # value is the tie-break rank for simultaneous events
    BLOCK_COMPLETE = 0
    WITNESS_SERVICE_END = 1
    ARRIVAL = 2

    @property
    def label(self) -> str:
        return {0: "BlockComplete", 1: "WitnessServiceEnd", 2: "Arrival"}[self.value]


@dataclass(frozen=True, order=True)
class SimEvent:
    """Heap entry. Ordering is (time, kind rank, sequence number)."""
    time: float
    kind: EventKind
    seq: int
    payload: tuple = ()
