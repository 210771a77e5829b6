"""One core: 512 time-multiplexed LIF neurons, 512x512 L0 + 512x512 L1 binary
crossbar, 32 L2 synapses per neuron, parameter bank, and event processing.

Canonical state is three byte images (what CONFIG/MON packets address):

    target 0  neuron memory   8192 B   512 x 128-bit words (see neuronword.py)
    target 1  synapse memory  65536 B  row-major: row r = {l01, axon} covers
              64 B = 512 destination bits, LSB-first (bit of neuron n lives at
              byte (r*64 + n//8), bit n%8)
    target 2  parameter bank  5148 B, layout:

        0x0000  axon_table[1024]   1 B each: bits1:0 factor code (1,2,4,8),
                                   bit2 sign (set = inhibitory)
        0x0400  q_plus   u16le     9-bit base UP probability
        0x0402  q_minus  u16le     9-bit base DOWN probability
        0x0404  distance_mod[8]    u16le each, indexed by distance tag d
        0x0414  leak_step u16le
        0x0416  flags     u8       bit0 l0_enable, bit1 plasticity_enable,
                                   bit2 range_opt_enable, bit3 distance_mod_enable
        0x0417  (pad)
        0x0418  lfsr_seed u32le    committed to the live LFSR when written
        0x041C  range_table[1024]  {start u16le, end u16le} per source axon

Reset defaults: flags = 0x01 (local sweeps on), every range entry = [0, 511],
lfsr_seed = 0x1ACE5.  Scalar mirrors of the bank are decoded lazily (dirty
flag) so byte-wise configuration stays cheap.

Internal scheduler events (normalized from packets at delivery):

    ("axon", l01, axon, d)      crossbar sweep, 1 SOP / 2 cycles per visited
                                destination (512 without range optimization)
    ("l2syn", neur, syn, d)     single L2 synapse: 1 SOP, 2 cycles
    ("virtual", neur, value)    direct LIF update: 0 SOPs, 2 cycles
    ("teacher", neur, ca)       Calcium overwrite: 0 SOPs, 2 cycles
    ("leak",)                   all-neuron leak: 0 SOPs, 1024 cycles
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lfsr import Lfsr17
from .neuronword import NeuronWord
from .plasticity import UpdateDecision, ssdsp_apply, ssdsp_condition

NEURONS = 512
NEURON_MEM_BYTES = 8192
SYNAPSE_MEM_BYTES = 65536

PB_AXON = 0x0000
PB_QPLUS = 0x0400
PB_QMINUS = 0x0402
PB_DMOD = 0x0404
PB_LEAK_STEP = 0x0414
PB_FLAGS = 0x0416
PB_SEED = 0x0418
PB_RANGE = 0x041C
PARAM_BANK_BYTES = PB_RANGE + 1024 * 4

FLAG_L0_ENABLE = 1
FLAG_PLASTICITY = 2
FLAG_RANGE_OPT = 4
FLAG_DMOD = 8

TARGET_NEURON = 0
TARGET_SYNAPSE = 1
TARGET_PARAM = 2

_TARGET_SIZES = {
    TARGET_NEURON: NEURON_MEM_BYTES,
    TARGET_SYNAPSE: SYNAPSE_MEM_BYTES,
    TARGET_PARAM: PARAM_BANK_BYTES,
}

_FACTORS = (1, 2, 4, 8)

# bits [14:0] = v_mem + ca; [18:0] adds ca_cnt
_STATE_MASK = 0x7FFF
_CA_FIELD_MASK = 0xFF << 11   # ca + ca_cnt


class AddressError(ValueError):
    pass


def lif_integrate(lo: int, contribution: int) -> tuple[int, bool]:
    """Saturating LIF update on the packed low word; reset-to-zero on fire.

    Disabled neurons pass through unchanged (the slot is still consumed by
    the caller's accounting).
    """
    if not (lo >> 57) & 1:
        return lo, False
    v = min(max((lo & 0x7FF) + contribution, 0), 2047)
    spiked = v >= (lo >> 19) & 0x7FF
    if spiked:
        v = 0
        ca = min(((lo >> 11) & 0xF) + 1, 15)
        return (lo & ~0x7FFF) | v | (ca << 11), True
    return (lo & ~0x7FF) | v, False


@dataclass
class CoreStats:
    sops: int = 0
    cycles: int = 0
    spikes: int = 0
    sops_range_equiv: int = 0   # SOPs the range tables would have allowed
    events_axon: int = 0
    events_l2: int = 0
    events_virtual: int = 0
    events_teacher: int = 0
    events_leak: int = 0

    def as_dict(self) -> dict:
        return dict(vars(self))


class Core:
    """Owns the three byte images plus the live LFSR and scheduler FIFO."""

    def __init__(self, scheduler_capacity: int = 16):
        self.neuron_bytes = np.zeros(NEURON_MEM_BYTES, dtype=np.uint8)
        self.synapse_bytes = np.zeros(SYNAPSE_MEM_BYTES, dtype=np.uint8)
        self.param_bytes = np.zeros(PARAM_BANK_BYTES, dtype=np.uint8)
        self.nm64 = self.neuron_bytes.view(np.uint64).reshape(NEURONS, 2)
        self.syn64 = self.synapse_bytes.view(np.uint64).reshape(1024, 8)
        self.scheduler: deque = deque()
        self.scheduler_capacity = scheduler_capacity
        self.stats = CoreStats()
        self._spike_scratch = np.empty(NEURONS, dtype=np.int32)
        self._params_dirty = True
        self._seed_dirty = True
        self.lfsr = Lfsr17(0x1ACE5)
        self._write_param_defaults()

    def _write_param_defaults(self):
        self.param_bytes[PB_FLAGS] = FLAG_L0_ENABLE
        self.param_bytes[PB_SEED:PB_SEED + 4] = \
            np.frombuffer((0x1ACE5).to_bytes(4, "little"), dtype=np.uint8)
        rng = self.param_bytes[PB_RANGE:].view(np.uint16).reshape(1024, 2)
        rng[:, 0] = 0
        rng[:, 1] = 511
        self._params_dirty = True
        self._seed_dirty = True

    # -- byte-granular memory plane --------------------------------------

    def mem_write_byte(self, target: int, byte_addr: int, data: int) -> None:
        size = _TARGET_SIZES.get(target)
        if size is None:
            raise AddressError(f"unknown memory target {target}")
        if not 0 <= byte_addr < size:
            raise AddressError(f"target {target} address {byte_addr} >= {size}")
        if target == TARGET_NEURON:
            self.neuron_bytes[byte_addr] = data
        elif target == TARGET_SYNAPSE:
            self.synapse_bytes[byte_addr] = data
        else:
            self.param_bytes[byte_addr] = data
            self._params_dirty = True
            if PB_SEED <= byte_addr < PB_SEED + 4:
                self._seed_dirty = True

    def mem_read_byte(self, target: int, byte_addr: int) -> int:
        size = _TARGET_SIZES.get(target)
        if size is None:
            raise AddressError(f"unknown memory target {target}")
        if not 0 <= byte_addr < size:
            raise AddressError(f"target {target} address {byte_addr} >= {size}")
        mem = (self.neuron_bytes, self.synapse_bytes, self.param_bytes)[target]
        return int(mem[byte_addr])

    # -- parameter mirrors -------------------------------------------------

    def _refresh_params(self):
        pb = self.param_bytes
        axon = pb[PB_AXON:PB_AXON + 1024].astype(np.int64)
        factor = np.take(_FACTORS, axon & 3)
        self.sign_factor = np.where(axon & 4, -factor, factor)
        u16 = pb.view(np.uint16)
        self.q_plus = int(u16[PB_QPLUS // 2])
        self.q_minus = int(u16[PB_QMINUS // 2])
        self.distance_mod = u16[PB_DMOD // 2:PB_DMOD // 2 + 8].astype(np.int64)
        self.leak_step = int(u16[PB_LEAK_STEP // 2])
        flags = int(pb[PB_FLAGS])
        self.l0_enable = bool(flags & FLAG_L0_ENABLE)
        self.plasticity_enable = bool(flags & FLAG_PLASTICITY)
        self.range_opt = bool(flags & FLAG_RANGE_OPT)
        self.dmod_enable = bool(flags & FLAG_DMOD)
        ranges = pb[PB_RANGE:].view(np.uint16).reshape(1024, 2).astype(np.int64)
        self.range_start = ranges[:, 0]
        self.range_end = ranges[:, 1]
        if np.any(self.range_start > self.range_end) or \
                np.any(self.range_end >= NEURONS):
            raise AddressError("range table entry outside [0, 511] or inverted")
        for name, q in (("q_plus", self.q_plus), ("q_minus", self.q_minus)):
            if q >= 512:
                raise AddressError(f"{name}={q} exceeds 9-bit range")
        if self._seed_dirty:
            seed = int.from_bytes(pb[PB_SEED:PB_SEED + 4].tobytes(), "little")
            self.lfsr = Lfsr17(seed)
            self._seed_dirty = False
        self._params_dirty = False

    def params(self):
        if self._params_dirty:
            self._refresh_params()
        return self

    # -- event timing and processing ---------------------------------------

    def event_cycles(self, ev: tuple) -> int:
        """Service time in core cycles, known before execution."""
        kind = ev[0]
        if kind == "axon":
            p = self.params()
            if p.range_opt:
                row = ev[1] * NEURONS + ev[2]
                return 2 * int(p.range_end[row] - p.range_start[row] + 1)
            return 2 * NEURONS
        if kind == "leak":
            return 2 * NEURONS
        return 2   # l2syn, virtual, teacher

    def _effective_q(self, d: int) -> tuple[int, int]:
        if self.dmod_enable:
            q = int(self.distance_mod[d])
            return q, q
        return self.q_plus, self.q_minus

    def apply_event(self, ev: tuple) -> list[int]:
        """Execute one scheduler event; returns indices of neurons that fired."""
        p = self.params()
        kind = ev[0]
        st = self.stats
        if kind == "axon":
            _, l01, axon, d = ev
            if not 0 <= axon < NEURONS:
                raise AddressError(f"axon {axon} >= {NEURONS}")
            row = l01 * NEURONS + axon
            start, end = 0, NEURONS - 1
            if p.range_opt:
                start, end = int(p.range_start[row]), int(p.range_end[row])
            q_up, q_dn = self._effective_q(d)
            n_spikes, new_state = kernels.sweep_axon_row(
                self.nm64, self.syn64[row], start, end,
                int(p.sign_factor[row]), p.plasticity_enable,
                self.lfsr.state, q_up, q_dn, self._spike_scratch,
            )
            self.lfsr.state = new_state
            width = end - start + 1
            st.sops += width
            st.cycles += 2 * width
            st.sops_range_equiv += int(
                p.range_end[row] - p.range_start[row] + 1)
            st.events_axon += 1
            fired = self._spike_scratch[:n_spikes].tolist()
            st.spikes += n_spikes
            return fired
        if kind == "l2syn":
            _, neur, syn, d = ev
            fired = self._l2_synapse(neur, syn, d)
            st.sops += 1
            st.cycles += 2
            st.sops_range_equiv += 1
            st.events_l2 += 1
            st.spikes += len(fired)
            return fired
        if kind == "virtual":
            _, neur, value = ev
            lo = int(self.nm64[neur, 0])
            lo, spiked = lif_integrate(lo, value)
            self.nm64[neur, 0] = lo
            st.cycles += 2
            st.events_virtual += 1
            if spiked:
                st.spikes += 1
                return [neur]
            return []
        if kind == "teacher":
            _, neur, ca = ev
            lo = int(self.nm64[neur, 0])
            self.nm64[neur, 0] = (lo & ~_CA_FIELD_MASK) | (ca << 11)
            st.cycles += 2
            st.events_teacher += 1
            return []
        if kind == "leak":
            kernels.leak_all(self.nm64, p.leak_step)
            st.cycles += 2 * NEURONS
            st.events_leak += 1
            return []
        raise ValueError(f"unknown scheduler event {ev!r}")

    def _l2_synapse(self, neur: int, syn: int, d: int) -> list[int]:
        """Single-SOP L2 event: the weight bit lives in the neuron's own word."""
        if not (0 <= neur < NEURONS and 0 <= syn < 32):
            raise AddressError(f"L2 address neur={neur} syn={syn} out of range")
        p = self.params()
        lo = int(self.nm64[neur, 0])
        hi = int(self.nm64[neur, 1])
        w = (hi >> (32 + syn)) & 1
        if p.plasticity_enable:
            word9 = self.lfsr.step9()
            flags = (lo >> 57) & 3
            if flags == 3:   # enabled and plastic
                decision = ssdsp_condition(
                    lo & 0x7FF, (lo >> 11) & 0xF, (lo >> 30) & 0x7FF,
                    (lo >> 41) & 0xF, (lo >> 45) & 0xF, (lo >> 49) & 0xF)
                q_up, q_dn = self._effective_q(d)
                q_eff = q_up if decision == UpdateDecision.UP else q_dn
                w_new = ssdsp_apply(w, decision, word9, q_eff)
                if w_new != w:
                    hi ^= 1 << (32 + syn)
                    self.nm64[neur, 1] = hi
        # integration uses the pre-update weight, unscaled (+w)
        lo, spiked = lif_integrate(lo, w)
        self.nm64[neur, 0] = lo
        return [neur] if spiked else []

    # -- connectivity reads for the encoder --------------------------------

    def neuron_word(self, neur: int) -> NeuronWord:
        lo = int(self.nm64[neur, 0])
        hi = int(self.nm64[neur, 1])
        return NeuronWord.unpack(lo | (hi << 64))

    def reset_dynamic_state(self) -> None:
        """Testbench helper: clear v_mem/ca/ca_cnt everywhere, keep config."""
        mask = ~np.uint64(0x7FFFF)
        self.nm64[:, 0] &= mask
