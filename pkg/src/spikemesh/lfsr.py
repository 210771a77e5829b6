"""17-bit Galois LFSR, characteristic polynomial x^17 + x^3 + 1.

Serial form: output = LSB; shift right; if output was 1, XOR the tap mask
0x10004 (bits 16 and 2 — the polynomial divided by x).  Maximal length:
every nonzero state is visited once per period of 2^17 - 1 = 131071 steps.
The 9-unfolded form consumes 9 serial steps and returns them as one 9-bit
word (bit 0 = first serial output), matching the shared-update-logic
consumption of one probability comparison per synaptic operation.

This module also precomputes the full serial orbit once per process
(`orbit_tables`), which lets the vectorized numpy backend reproduce the
serial stream bit-exactly: a run of k draws starting at orbit position p
reads words at positions p, p+9, ..., p+9(k-1) (mod 131071).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TAPS = 0x10004
PERIOD = (1 << 17) - 1
UNFOLD = 9


class Lfsr17:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        if not 0 < seed < (1 << 17):
            raise ValueError(f"LFSR seed {seed:#x} must be a nonzero 17-bit value")
        self.state = seed

    def step(self) -> int:
        out = self.state & 1
        self.state >>= 1
        if out:
            self.state ^= TAPS
        return out

    def step9(self) -> int:
        word = 0
        for k in range(UNFOLD):
            word |= self.step() << k
        return word


def step_state(state: int) -> tuple[int, int]:
    """Functional single step: (next_state, output_bit)."""
    out = state & 1
    state >>= 1
    if out:
        state ^= TAPS
    return state, out


@lru_cache(maxsize=1)
def orbit_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(state_seq, word9_at, pos_of_state) over the full serial orbit.

    state_seq[p]    state after p serial steps from seed 0x00001
    word9_at[p]     the 9-bit word a step9 call emits from orbit position p
    pos_of_state[s] orbit position of state s (-1 for the forbidden 0)
    """
    state_seq = np.empty(PERIOD, dtype=np.uint32)
    s = 1
    for p in range(PERIOD):
        state_seq[p] = s
        s, _ = step_state(s)
    out_bits = (state_seq & 1).astype(np.uint16)
    word9_at = np.zeros(PERIOD, dtype=np.uint16)
    for k in range(UNFOLD):
        word9_at |= np.roll(out_bits, -k) << k
    pos_of_state = np.full(1 << 17, -1, dtype=np.int32)
    pos_of_state[state_seq] = np.arange(PERIOD, dtype=np.int32)
    return state_seq, word9_at, pos_of_state
