"""Bulk network-building helpers.

Everything here writes the same canonical byte images that CONFIG packets
address — parameter-plane writes go through ``mem_write_byte`` so the lazy
mirrors stay coherent, while synapse/neuron planes (which have no mirrors)
are written with numpy slices for speed.  Loading a network this way is
byte-for-byte identical to streaming the equivalent CONFIG packets.
"""
from __future__ import annotations

import numpy as np

from ..core import (
    Core, PB_AXON, PB_FLAGS, PB_LEAK_STEP, PB_QMINUS, PB_QPLUS, PB_RANGE,
    PB_SEED, TARGET_PARAM,
)
from ..neuronword import NeuronWord

_FACTOR_CODE = {1: 0, 2: 1, 4: 2, 8: 3}


def axon_byte(factor: int) -> int:
    """Parameter-bank byte for a signed axon factor in {±1, ±2, ±4, ±8}."""
    code = _FACTOR_CODE.get(abs(factor))
    if code is None or factor == 0:
        raise ValueError(f"axon factor {factor} not in ±{{1,2,4,8}}")
    return code | (4 if factor < 0 else 0)


def set_axon_factor(core: Core, row: int, factor: int) -> None:
    """Program one of the 1024 axon rows (row = l01*512 + axon)."""
    core.mem_write_byte(TARGET_PARAM, PB_AXON + row, axon_byte(factor))


def set_row_targets(core: Core, l01: int, axon: int, dests) -> None:
    """Overwrite one synapse row's 512 destination bits.

    ``dests`` is an iterable of destination neuron indices whose bits are
    set; all other bits in the row are cleared.
    """
    bits = np.zeros(512, dtype=np.uint8)
    idx = np.asarray(list(dests), dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() > 511:
            raise ValueError("destination index outside [0, 511]")
        bits[idx] = 1
    row = l01 * 512 + axon
    core.synapse_bytes[row * 64:(row + 1) * 64] = np.packbits(
        bits, bitorder="little")


def set_row_range(core: Core, row: int, start: int, end: int) -> None:
    """Program one range-table entry (row = l01*512 + axon)."""
    for i, b in enumerate(int(start).to_bytes(2, "little")
                          + int(end).to_bytes(2, "little")):
        core.mem_write_byte(TARGET_PARAM, PB_RANGE + row * 4 + i, b)


def write_neuron(core: Core, n: int, word: NeuronWord) -> None:
    raw = word.validate().pack()
    core.neuron_bytes[n * 16:(n + 1) * 16] = np.frombuffer(
        raw.to_bytes(16, "little"), dtype=np.uint8)


def set_flags(core: Core, *, l0_enable=True, plasticity=False,
              range_opt=False, dmod=False) -> None:
    flags = (1 if l0_enable else 0) | (2 if plasticity else 0) \
        | (4 if range_opt else 0) | (8 if dmod else 0)
    core.mem_write_byte(TARGET_PARAM, PB_FLAGS, flags)


def set_q(core: Core, q_plus: int, q_minus: int) -> None:
    for off, val in ((PB_QPLUS, q_plus), (PB_QMINUS, q_minus)):
        for i, b in enumerate(int(val).to_bytes(2, "little")):
            core.mem_write_byte(TARGET_PARAM, off + i, b)


def set_leak_step(core: Core, step: int) -> None:
    for i, b in enumerate(int(step).to_bytes(2, "little")):
        core.mem_write_byte(TARGET_PARAM, PB_LEAK_STEP + i, b)


def set_seed(core: Core, seed: int) -> None:
    for i, b in enumerate(int(seed).to_bytes(4, "little")):
        core.mem_write_byte(TARGET_PARAM, PB_SEED + i, b)
