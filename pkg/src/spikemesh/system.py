"""Chip mesh assembly and the global deterministic event loop.

Time is a single integer cycle counter at f_clk.  Every component advances
through a (time, sequence) heap, so identical (configuration, injections,
seeds) yield bit-identical traces; the sequence number is assigned at push
time, making same-cycle ordering the insertion order.

Component timing model:

  * A core pops its scheduler when idle, occupies `event_cycles` cycles, and
    applies effects atomically at the end of the window (sweeps are atomic
    at completion).
  * The L1 star has no buffering: one packet moves per chip cycle, in the
    fixed order descending-from-L2, testbench L1 entry, then cores 0..3.
    A multicast moves only when every masked destination scheduler has room
    (atomic, back-pressured, never dropped).
  * The L2 router serves one packet per cycle among its five input FIFOs
    (N, E, S, W, L1) via the configured arbiter, considering only ports
    whose head can actually move this cycle.
  * An AER link carries one packet at a time, four transactions of
    `aer_cycles_per_transaction` cycles each; a packet arriving at a full
    FIFO parks on the link and retries when room frees.

Blocked components go dormant and are woken by room events (scheduler pops,
FIFO pops, link completions) — the loop never polls.

Conservation contract: packets injected + packets generated equals packets
delivered + packets dropped + packets in flight, where the local L0
self-event of a spike is a scheduler entry (not a packet) and a multicast
counts as one delivery when its last copy lands.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import struct
from collections import deque
from dataclasses import dataclass, field

from .config import SystemConfig
from .core import Core, CoreStats, NEURONS
from .packets import (
    Config, Leak, MonReply, MonReq, SpikeL0, SpikeL1, SpikeL2, Teacher,
    Virtual, decode_packet,
)
from .routing import (
    ArbiterState, FifoBuffer, Port, arbiter_next, l0_encode, l1_targets,
    l2_route,
)

_OPPOSITE = {Port.N: Port.S, Port.S: Port.N, Port.E: Port.W, Port.W: Port.E}
_DELTA = {Port.N: (0, 1), Port.S: (0, -1), Port.E: (1, 0), Port.W: (-1, 0)}


class SchedulerOverflowError(RuntimeError):
    """A core spiked into its own full scheduler; a core cannot back-pressure
    itself, so this is a configuration error (FIFO too small for the load)."""


class OffGridError(RuntimeError):
    pass


class DeadlockError(RuntimeError):
    pass


class _Link:
    """One unidirectional chip-to-chip AER link."""

    __slots__ = ("dst_coord", "busy", "pending", "packets", "stall_cycles",
                 "busy_since")

    def __init__(self, dst_coord):
        self.dst_coord = dst_coord
        self.busy = False
        self.pending = None       # transferred packet waiting for FIFO room
        self.packets = 0
        self.stall_cycles = 0
        self.busy_since = 0


class _Chip:
    def __init__(self, coord, cfg: SystemConfig):
        self.coord = coord
        self.cores = [Core(cfg.scheduler_capacity) for _ in range(4)]
        self.core_busy = [False] * 4
        # injections that found no room park here, drained in arrival order
        # (the chip's single input link serializes the testbench anyway)
        self.pending_inject = deque()
        self.outbox = [deque() for _ in range(4)]
        self.l1_injected = deque()       # testbench L1 entry point
        self.l1_descending = deque()     # capacity 1: L2 -> cores staging
        self.l2_fifos = [FifoBuffer(cfg.fifo_capacity) for _ in Port]
        self.arbiter = ArbiterState(mode=cfg.router_arbiter)
        self.links: dict[Port, _Link] = {}
        self.l1_sched_t = -1             # next scheduled L1 service, -1 = none
        self.l2_sched_t = -1
        self.l1_next_free = 0            # earliest next service slot
        self.l2_next_free = 0
        self.l1_deliveries = 0
        self.l2_hops = 0


@dataclass
class SimStats:
    f_clk_mhz: float
    wall_cycles: int
    sops: int
    spikes: int
    core_cycles: int
    sops_range_equiv: int
    l1_deliveries: int
    l2_hops: int
    packets_injected: int
    packets_generated: int
    packets_delivered: int
    packets_dropped: int
    packets_in_flight: int
    per_core: dict = field(default_factory=dict)
    per_link: dict = field(default_factory=dict)

    @property
    def wall_time_s(self) -> float:
        return self.wall_cycles / (self.f_clk_mhz * 1e6)

    @property
    def r_sop_msops(self) -> float:
        t = self.wall_time_s
        return (self.sops / t) / 1e6 if t > 0 else 0.0

    def as_dict(self) -> dict:
        d = dict(vars(self))
        d["wall_time_s"] = self.wall_time_s
        d["r_sop_msops"] = self.r_sop_msops
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


class System:
    def __init__(self, config: SystemConfig | None = None):
        self.cfg = (config or SystemConfig()).validate()
        self.chips: dict[tuple[int, int], _Chip] = {}
        for x in range(self.cfg.grid_width):
            for y in range(self.cfg.grid_height):
                self.chips[(x, y)] = _Chip((x, y), self.cfg)
        for (x, y), chip in self.chips.items():
            for port, (dx, dy) in _DELTA.items():
                if (x + dx, y + dy) in self.chips:
                    chip.links[port] = _Link((x + dx, y + dy))
        self.t = 0
        self._heap: list = []
        self._seq = 0
        self.injected = 0
        self.generated = 0
        self.delivered = 0
        self.dropped = 0
        self._digest = hashlib.blake2b(digest_size=16)
        self.spike_hook = None
        self.deliver_hook = None
        self.spike_trace: list = [] if self.cfg.record_spike_trace else None
        self.monitor_log: list[MonReply] = []

    # -- helpers ------------------------------------------------------------

    def core(self, coord, idx: int) -> Core:
        return self.chips[coord].cores[idx]

    def _push(self, t: int, kind: str, *data):
        heapq.heappush(self._heap, (t, self._seq, kind, data))
        self._seq += 1

    def in_flight(self) -> int:
        n = 0
        for chip in self.chips.values():
            n += len(chip.pending_inject)
            n += sum(len(q) for q in chip.outbox)
            n += len(chip.l1_injected) + len(chip.l1_descending)
            n += sum(len(f) for f in chip.l2_fifos)
            for link in chip.links.values():
                n += (1 if link.busy else 0)
        return n

    # -- injection ----------------------------------------------------------

    def inject(self, t: int, coord, event) -> None:
        """Queue one testbench packet for time t (raw words are decoded)."""
        if isinstance(event, int):
            event = decode_packet(event)
        if coord not in self.chips:
            raise ValueError(f"no chip at {coord}")
        if t < self.t:
            raise ValueError(f"cannot inject at {t} < current time {self.t}")
        self.injected += 1
        self._push(t, "inject", coord, event)

    def _handle_inject(self, t: int, coord, ev) -> None:
        chip = self.chips[coord]
        if isinstance(ev, Config):
            self.chips[coord].cores[ev.core].mem_write_byte(
                ev.target, ev.byte_addr, ev.data)
            self.delivered += 1
            return
        if isinstance(ev, MonReq):
            data = chip.cores[ev.core].mem_read_byte(ev.target, ev.byte_addr)
            self.monitor_log.append(MonReply(core=ev.core,
                                             byte_addr=ev.byte_addr, data=data))
            self.delivered += 1
            return
        if isinstance(ev, SpikeL0):
            self._sched_inject(t, coord, [ev.core], ("axon", 0, ev.axon, 0))
            return
        if isinstance(ev, Virtual):
            self._sched_inject(t, coord, [ev.core],
                               ("virtual", ev.neur, ev.value))
            return
        if isinstance(ev, Teacher):
            cores = [c for c in range(4) if ev.cores_mask & (1 << c)]
            self._sched_inject(t, coord, cores, ("teacher", ev.neur, ev.ca_value))
            return
        if isinstance(ev, Leak):
            cores = [c for c in range(4) if ev.cores_mask & (1 << c)]
            self._sched_inject(t, coord, cores, ("leak",))
            return
        if isinstance(ev, SpikeL1):
            chip.l1_injected.append(ev)
            self._wake_l1(t, chip)
            return
        if isinstance(ev, SpikeL2):
            fifo = chip.l2_fifos[Port.L1]
            if fifo.full or chip.pending_inject:
                chip.pending_inject.append(("l2pkt", ev))
                return
            fifo.push(ev)
            self._wake_l2(t, chip)
            return
        raise ValueError(f"cannot inject {ev!r}")

    def _sched_inject(self, t: int, coord, cores: list[int], item: tuple):
        """Atomic scheduler delivery to one or more local cores."""
        if not cores:
            self.dropped += 1
            return
        chip = self.chips[coord]
        if not chip.pending_inject and all(
                len(chip.cores[c].scheduler) < chip.cores[c].scheduler_capacity
                for c in cores):
            for c in cores:
                chip.cores[c].scheduler.append(item)
                self._try_start(t, coord, c)
            self.delivered += 1
            if self.deliver_hook is not None:
                self.deliver_hook(t, coord, cores, item)
        else:
            chip.pending_inject.append(("sched", coord, cores, item))

    def _drain_pending(self, t: int, coord):
        chip = self.chips[coord]
        pend = chip.pending_inject
        while pend:
            entry = pend[0]
            if entry[0] == "l2pkt":
                fifo = chip.l2_fifos[Port.L1]
                if fifo.full:
                    return
                pend.popleft()
                fifo.push(entry[1])
                self._wake_l2(t, chip)
                continue
            _, c2, cores, item = entry
            if all(len(chip.cores[c].scheduler)
                   < chip.cores[c].scheduler_capacity for c in cores):
                pend.popleft()
                for c in cores:
                    chip.cores[c].scheduler.append(item)
                    self._try_start(t, c2, c)
                self.delivered += 1
            else:
                return

    # -- core service ---------------------------------------------------

    def _try_start(self, t: int, coord, core_idx: int):
        chip = self.chips[coord]
        if chip.core_busy[core_idx]:
            return
        core = chip.cores[core_idx]
        if not core.scheduler:
            return
        ev = core.scheduler.popleft()
        chip.core_busy[core_idx] = True
        self._push(t + core.event_cycles(ev), "finish", coord, core_idx, ev)
        # room just freed: parked injections first, then blocked routers
        self._drain_pending(t, coord)
        self._wake_l1(t, chip)

    def _handle_finish(self, t: int, coord, core_idx: int, ev: tuple):
        chip = self.chips[coord]
        core = chip.cores[core_idx]
        fired = core.apply_event(ev)
        if fired:
            p = core.params()
            sent_any = False
            for n in fired:
                self._digest.update(struct.pack("<qiBH", t,
                                                coord[0] * 8 + coord[1],
                                                core_idx, n))
                if self.spike_trace is not None:
                    self.spike_trace.append((t, coord, core_idx, n))
                if self.spike_hook is not None:
                    self.spike_hook(t, coord, core_idx, n)
                word = core.neuron_word(n)
                local, l1p, l2p = l0_encode(word, n, core_idx, p.l0_enable)
                if local:
                    if len(core.scheduler) >= core.scheduler_capacity:
                        raise SchedulerOverflowError(
                            f"chip {coord} core {core_idx}: self-spike into a "
                            f"full scheduler (capacity "
                            f"{core.scheduler_capacity})")
                    core.scheduler.append(("axon", 0, n, 0))
                if l1p is not None:
                    chip.outbox[core_idx].append((core_idx, l1p))
                    self.generated += 1
                    sent_any = True
                if l2p is not None:
                    chip.outbox[core_idx].append((core_idx, l2p))
                    self.generated += 1
                    sent_any = True
            if sent_any:
                self._wake_l1(t, chip)
        chip.core_busy[core_idx] = False
        self._try_start(t, coord, core_idx)

    # -- L1 star ----------------------------------------------------------

    def _wake_l1(self, t: int, chip: _Chip):
        when = max(t, chip.l1_next_free)
        if chip.l1_sched_t < 0 or chip.l1_sched_t > when:
            chip.l1_sched_t = when
            self._push(when, "l1", chip.coord)

    def _wake_l2(self, t: int, chip: _Chip):
        when = max(t, chip.l2_next_free)
        if chip.l2_sched_t < 0 or chip.l2_sched_t > when:
            chip.l2_sched_t = when
            self._push(when, "l2", chip.coord)

    def _l1_has_work(self, chip: _Chip) -> bool:
        return bool(chip.l1_descending or chip.l1_injected
                    or any(chip.outbox))

    def _handle_l1(self, t: int, coord):
        chip = self.chips[coord]
        chip.l1_sched_t = -1
        if t < chip.l1_next_free:
            # stale wake inside an already-serviced cycle: re-arm instead of
            # servicing twice, so remaining work is never silently orphaned
            if self._l1_has_work(chip):
                self._wake_l1(t, chip)
            return
        moved = self._l1_service_one(t, chip)
        if moved:
            chip.l1_next_free = t + 1
            if self._l1_has_work(chip):
                self._wake_l1(t + 1, chip)
        # if nothing moved, stay dormant until a room event wakes us

    def _room(self, chip: _Chip, cores: list[int]) -> bool:
        return all(len(chip.cores[c].scheduler)
                   < chip.cores[c].scheduler_capacity for c in cores)

    def _l1_service_one(self, t: int, chip: _Chip) -> bool:
        coord = chip.coord
        # 1. descending L2 multicast
        if chip.l1_descending:
            pkt: SpikeL2 = chip.l1_descending[0]
            targets = l1_targets(pkt, source_core=None)
            if not targets:
                chip.l1_descending.popleft()
                self.dropped += 1
                return True
            if self._room(chip, targets):
                chip.l1_descending.popleft()
                for c in targets:
                    chip.cores[c].scheduler.append(
                        ("l2syn", pkt.neur, pkt.syn, pkt.d))
                    self._try_start(t, coord, c)
                chip.l1_deliveries += len(targets)
                self.delivered += 1
                if self.deliver_hook is not None:
                    self.deliver_hook(t, coord, targets,
                                      ("l2syn", pkt.neur, pkt.syn, pkt.d))
                self._wake_l2(t, chip)   # the descending slot freed
                return True
        # 2. testbench L1 entry
        if chip.l1_injected:
            pkt = chip.l1_injected[0]
            targets = l1_targets(pkt, source_core=None)
            if not targets:
                chip.l1_injected.popleft()
                self.dropped += 1
                return True
            if self._room(chip, targets):
                chip.l1_injected.popleft()
                for c in targets:
                    chip.cores[c].scheduler.append(("axon", 1, pkt.neur, 1))
                    self._try_start(t, coord, c)
                chip.l1_deliveries += len(targets)
                self.delivered += 1
                return True
        # 3. ascending from cores, fixed order
        for src in range(4):
            if not chip.outbox[src]:
                continue
            src_core, pkt = chip.outbox[src][0]
            if isinstance(pkt, SpikeL1):
                targets = l1_targets(pkt, source_core=src_core)
                if not targets:
                    chip.outbox[src].popleft()
                    self.dropped += 1
                    return True
                if self._room(chip, targets):
                    chip.outbox[src].popleft()
                    for c in targets:
                        chip.cores[c].scheduler.append(("axon", 1, pkt.neur, 1))
                        self._try_start(t, coord, c)
                    chip.l1_deliveries += len(targets)
                    self.delivered += 1
                    return True
            else:   # ascending SpikeL2 toward the mesh
                fifo = chip.l2_fifos[Port.L1]
                if not fifo.full:
                    chip.outbox[src].popleft()
                    fifo.push(pkt)
                    self._wake_l2(t, chip)
                    return True
        return False

    # -- L2 router ----------------------------------------------------------

    def _l2_head_movable(self, chip: _Chip, port: Port) -> bool:
        fifo = chip.l2_fifos[port]
        if not len(fifo):
            return False
        out, _ = l2_route(fifo.head())
        if out is None:
            return not chip.l1_descending
        link = chip.links.get(Port(out))
        if link is None:
            return True    # off-grid: serviceable (raises or drops)
        return not link.busy

    def _handle_l2(self, t: int, coord):
        chip = self.chips[coord]
        chip.l2_sched_t = -1
        if t < chip.l2_next_free:
            # stale wake inside an already-serviced cycle: re-arm, never
            # service twice in one cycle
            if any(self._l2_head_movable(chip, p) for p in Port):
                self._wake_l2(t, chip)
            return
        occ = [len(chip.l2_fifos[p]) if self._l2_head_movable(chip, p) else 0
               for p in Port]
        granted = arbiter_next(chip.arbiter, occ)
        if granted is None:
            return   # dormant until woken
        chip.l2_next_free = t + 1
        fifo = chip.l2_fifos[granted]
        pkt = fifo.pop()
        out, newpkt = l2_route(pkt)
        if out is None:
            chip.l1_descending.append(newpkt)
            self._wake_l1(t, chip)
        else:
            link = chip.links.get(Port(out))
            if link is None:
                msg = (f"packet {pkt} at chip {coord} routed off-grid "
                       f"({Port(out).name})")
                if self.cfg.strict_routing:
                    raise OffGridError(msg)
                self.dropped += 1
            else:
                link.busy = True
                link.busy_since = t
                link.packets += 1
                chip.l2_hops += 1
                self._push(t + 4 * self.cfg.aer_cycles_per_transaction,
                           "aer", coord, Port(out), newpkt)
        # FIFO room freed: ascending packets and parked link deliveries
        self._wake_l1(t, chip)
        self._drain_links_into(t, chip)
        self._drain_pending(t, coord)
        if any(self._l2_head_movable(chip, p) for p in Port):
            self._wake_l2(t + 1, chip)

    def _drain_links_into(self, t: int, chip: _Chip):
        """Retry parked arrivals on the four incoming links of `chip`."""
        for port in (Port.N, Port.E, Port.S, Port.W):
            delta = _DELTA[port]
            neighbor = (chip.coord[0] - delta[0], chip.coord[1] - delta[1])
            src_chip = self.chips.get(neighbor)
            if src_chip is None:
                continue
            link = src_chip.links.get(port)
            if link is None or link.pending is None:
                continue
            fifo = chip.l2_fifos[_OPPOSITE[port]]
            if fifo.full:
                continue
            fifo.push(link.pending)
            link.stall_cycles += t - link.busy_since
            link.pending = None
            link.busy = False
            self._wake_l2(t, chip)
            self._wake_l2(t, src_chip)

    def _handle_aer(self, t: int, src_coord, port: Port, pkt):
        src_chip = self.chips[src_coord]
        link = src_chip.links[port]
        dst_chip = self.chips[link.dst_coord]
        fifo = dst_chip.l2_fifos[_OPPOSITE[port]]
        if fifo.full:
            link.pending = pkt
            link.busy_since = t
            return
        fifo.push(pkt)
        link.busy = False
        self._wake_l2(t, dst_chip)
        self._wake_l2(t, src_chip)

    # -- loop -----------------------------------------------------------

    def run_until(self, t_end: int) -> None:
        while self._heap and self._heap[0][0] <= t_end:
            t, _, kind, data = heapq.heappop(self._heap)
            self.t = t
            if kind == "inject":
                self._handle_inject(t, *data)
            elif kind == "finish":
                self._handle_finish(t, *data)
            elif kind == "l1":
                self._handle_l1(t, *data)
            elif kind == "l2":
                self._handle_l2(t, *data)
            elif kind == "aer":
                self._handle_aer(t, *data)
        self.t = t_end

    def run_to_quiescence(self, limit: int = 1 << 62) -> int:
        while self._heap:
            if self._heap[0][0] > limit:
                raise DeadlockError(f"not quiescent by cycle {limit}")
            t, _, kind, data = heapq.heappop(self._heap)
            self.t = t
            if kind == "inject":
                self._handle_inject(t, *data)
            elif kind == "finish":
                self._handle_finish(t, *data)
            elif kind == "l1":
                self._handle_l1(t, *data)
            elif kind == "l2":
                self._handle_l2(t, *data)
            elif kind == "aer":
                self._handle_aer(t, *data)
        if self.in_flight():
            raise DeadlockError(
                f"{self.in_flight()} packets stuck with an empty event queue")
        return self.t

    def reset_run_state(self) -> None:
        """Clear every dynamic trace of the previous run, keeping all
        configuration: memory images, parameter banks, grid, links.

        After this the system behaves as if it had just been configured —
        LFSRs rewind to their programmed seeds, stats/digest/time restart at
        zero — so repeating the same stimulus replays the same run.
        """
        for chip in self.chips.values():
            for core in chip.cores:
                core.reset_dynamic_state()
                core.scheduler.clear()
                core.stats = CoreStats()
                core._params_dirty = True
                core._seed_dirty = True
            chip.core_busy = [False] * 4
            chip.pending_inject.clear()
            for q in chip.outbox:
                q.clear()
            chip.l1_injected.clear()
            chip.l1_descending.clear()
            for f in chip.l2_fifos:
                f.clear()
            chip.arbiter = ArbiterState(mode=self.cfg.router_arbiter)
            for link in chip.links.values():
                link.busy = False
                link.pending = None
                link.packets = 0
                link.stall_cycles = 0
                link.busy_since = 0
            chip.l1_sched_t = chip.l2_sched_t = -1
            chip.l1_next_free = chip.l2_next_free = 0
            chip.l1_deliveries = 0
            chip.l2_hops = 0
        self.t = 0
        self._heap.clear()
        self._seq = 0
        self.injected = self.generated = self.delivered = self.dropped = 0
        self._digest = hashlib.blake2b(digest_size=16)
        if self.spike_trace is not None:
            self.spike_trace = []
        self.monitor_log = []

    # -- observation ------------------------------------------------------

    def monitor_read(self, coord, core_idx: int, target: int,
                     byte_addr: int) -> int:
        return self.chips[coord].cores[core_idx].mem_read_byte(target, byte_addr)

    def spike_digest(self) -> str:
        return self._digest.hexdigest()

    def stats(self) -> SimStats:
        per_core = {}
        per_link = {}
        totals = dict(sops=0, spikes=0, cycles=0, range_equiv=0,
                      l1=0, hops=0)
        for coord, chip in self.chips.items():
            for idx, c in enumerate(chip.cores):
                per_core[f"{coord[0]},{coord[1]}/{idx}"] = c.stats.as_dict()
                totals["sops"] += c.stats.sops
                totals["spikes"] += c.stats.spikes
                totals["cycles"] += c.stats.cycles
                totals["range_equiv"] += c.stats.sops_range_equiv
            totals["l1"] += chip.l1_deliveries
            totals["hops"] += chip.l2_hops
            for port, link in chip.links.items():
                per_link[f"{coord[0]},{coord[1]}/{port.name}"] = dict(
                    packets=link.packets, stall_cycles=link.stall_cycles)
        return SimStats(
            f_clk_mhz=self.cfg.f_clk_mhz,
            wall_cycles=self.t,
            sops=totals["sops"],
            spikes=totals["spikes"],
            core_cycles=totals["cycles"],
            sops_range_equiv=totals["range_equiv"],
            l1_deliveries=totals["l1"],
            l2_hops=totals["hops"],
            packets_injected=self.injected,
            packets_generated=self.generated,
            packets_delivered=self.delivered,
            packets_dropped=self.dropped,
            packets_in_flight=self.in_flight(),
            per_core=per_core,
            per_link=per_link,
        )
