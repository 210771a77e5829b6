"""Hierarchical routing fabric: pure decision logic and passive buffers.

Three levels:

  L0  per-core decode/encode — packets sort to the controller (CONFIG/MON)
      or the scheduler FIFO (spikes, virtual, teacher, leak); a firing
      neuron's connectivity fans out to at most one local sweep, one L1
      multicast, and one L2 packet.
  L1  per-chip star, no buffering — ascending multicast to the other local
      cores (source-exclusive), ascending L2 forward, or descending L2
      multicast to the masked cores.
  L2  per-chip mesh router, five buffered input ports (N, E, S, W, L1),
      dimension-ordered: x resolves fully before y, hop count saturates the
      distance tag at 7.

Arbitration and tie-breaks use the fixed port order N, E, S, W, L1.
Grid orientation: +x = East, +y = North.

Timing (links, service rates) lives in system.py; everything here is pure
and unit-testable.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

from .neuronword import NeuronWord
from .packets import SpikeL1, SpikeL2


class Port(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3
    L1 = 4


PORT_ORDER = (Port.N, Port.E, Port.S, Port.W, Port.L1)

ROUND_ROBIN = "round_robin"
PRIORITY = "priority"


class FifoBuffer:
    """Bounded FIFO; the owner must check `full` before pushing (no drops)."""

    def __init__(self, capacity: int = 16):
        if capacity < 1:
            raise ValueError("FIFO capacity must be >= 1")
        self.capacity = capacity
        self._q: deque = deque()
        self.max_occupancy = 0

    def __len__(self) -> int:
        return len(self._q)

    @property
    def full(self) -> bool:
        return len(self._q) >= self.capacity

    def push(self, item) -> None:
        if self.full:
            raise OverflowError("push into full FIFO (back-pressure violated)")
        self._q.append(item)
        if len(self._q) > self.max_occupancy:
            self.max_occupancy = len(self._q)

    def head(self):
        return self._q[0]

    def pop(self):
        return self._q.popleft()

    def clear(self) -> None:
        self._q.clear()
        self.max_occupancy = 0


@dataclass
class ArbiterState:
    mode: str = ROUND_ROBIN
    last_granted: int = Port.L1   # so the first rotation starts at N


def arbiter_next(a: ArbiterState, occupancies) -> int | None:
    """Grant one of the five ports, or None when all are empty.

    ROUND_ROBIN: next nonempty port in fixed order after last_granted.
    PRIORITY: max occupancy, ties broken in the fixed order.
    """
    if a.mode == ROUND_ROBIN:
        for step in range(1, len(PORT_ORDER) + 1):
            port = PORT_ORDER[(a.last_granted + step) % len(PORT_ORDER)]
            if occupancies[port] > 0:
                a.last_granted = port
                return port
        return None
    if a.mode == PRIORITY:
        best = None
        for port in PORT_ORDER:
            if occupancies[port] > 0 and (best is None
                                          or occupancies[port] > occupancies[best]):
                best = port
        if best is not None:
            a.last_granted = best
        return best
    raise ValueError(f"unknown arbiter mode {a.mode!r}")


def l2_route(p: SpikeL2) -> tuple[int | None, SpikeL2]:
    """Dimension-ordered step: (output port or None for local, updated packet).

    Forwarding decrements the offset magnitude and saturates d at 7; the
    local delivery leaves the packet untouched.
    """
    if p.dx > 0:
        return Port.E, SpikeL2(p.dx - 1, p.dy, p.cores_mask, p.syn, p.neur,
                               min(p.d + 1, 7))
    if p.dx < 0:
        return Port.W, SpikeL2(p.dx + 1, p.dy, p.cores_mask, p.syn, p.neur,
                               min(p.d + 1, 7))
    if p.dy > 0:
        return Port.N, SpikeL2(p.dx, p.dy - 1, p.cores_mask, p.syn, p.neur,
                               min(p.d + 1, 7))
    if p.dy < 0:
        return Port.S, SpikeL2(p.dx, p.dy + 1, p.cores_mask, p.syn, p.neur,
                               min(p.d + 1, 7))
    return None, p


def l1_expand_mask(source_core: int, conn_l1: int) -> int:
    """3-bit L1 connectivity -> 4-bit core mask excluding the source.

    Bit k of conn_l1 addresses the k-th other core in ascending index order.
    """
    others = [c for c in range(4) if c != source_core]
    mask = 0
    for k, core in enumerate(others):
        if conn_l1 & (1 << k):
            mask |= 1 << core
    return mask


def l1_targets(p: SpikeL1, source_core: int | None) -> list[int]:
    """Destination cores of an L1 multicast; ascending packets skip the source."""
    return [c for c in range(4)
            if p.cores_mask & (1 << c) and c != source_core]


def l0_encode(word: NeuronWord, neuron_index: int, source_core: int,
              l0_enable: bool) -> tuple[bool, SpikeL1 | None, SpikeL2 | None]:
    """Fan-out of one output spike: (local sweep?, L1 packet, L2 packet)."""
    l1 = None
    if word.conn_l1:
        l1 = SpikeL1(cores_mask=l1_expand_mask(source_core, word.conn_l1),
                     neur=neuron_index)
    l2 = None
    if word.conn_chip_dx != 0 or word.conn_chip_dy != 0:
        l2 = SpikeL2(dx=word.conn_chip_dx, dy=word.conn_chip_dy,
                     cores_mask=word.conn_cores, syn=word.conn_syn,
                     neur=word.conn_neur, d=1)
    return l0_enable, l1, l2


@dataclass
class AerLinkModel:
    """Timing of one unidirectional chip-to-chip link.

    One 32-bit packet = four 8-bit transactions; each transaction costs
    `cycles_per_transaction` (four-phase handshake including the two-cycle
    synchronizer), 24 cycles per packet by default: 55 MHz / 24 = 2.29 M
    packets/s per link.
    """
    cycles_per_transaction: int = 6

    @property
    def cycles_per_packet(self) -> int:
        return 4 * self.cycles_per_transaction

    def packets_per_second(self, f_clk_hz: float) -> float:
        return f_clk_hz / self.cycles_per_packet
