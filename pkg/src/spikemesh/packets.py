"""32-bit routed event words and their AER byte serialization.

Packet32 layout — single source of truth, type nibble in bits [31:28]:

    0 CONFIG     core[27:26] target[25:24] byte_addr[23:8] data[7:0]
    1 MON_REQ    core[27:26] target[25:24] byte_addr[23:8]
    2 MON_REPLY  core[27:26] byte_addr[23:8] data[7:0]
    3 SPIKE_L0   core[27:26] axon[8:0]            (testbench-injectable only)
    4 SPIKE_L1   cores_mask[27:24] neur[8:0]
    5 SPIKE_L2   dx[27:25] dy[24:22] cores_mask[21:18] syn[17:13] neur[12:4]
                 d[3:1] reserved[0]
    6 VIRTUAL    core[27:26] neur[16:8] value[7:0] (two's complement)
    7 TEACHER    cores_mask[27:24] neur[16:8] ca_value[3:0]
    8 LEAK       cores_mask[27:24]

dx/dy are sign-magnitude 3-bit fields (sign in the high bit, magnitude <= 3);
-0 is normalized to +0 at encode time.  target selects 0 = neuron memory,
1 = synapse memory, 2 = parameter bank.  Unused bits are zero on encode and
ignored on decode.

One packet travels an AER link as four 8-bit transactions, most significant
byte first.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum


class PacketType(IntEnum):
    CONFIG = 0
    MON_REQ = 1
    MON_REPLY = 2
    SPIKE_L0 = 3
    SPIKE_L1 = 4
    SPIKE_L2 = 5
    VIRTUAL = 6
    TEACHER = 7
    LEAK = 8


class PacketError(ValueError):
    pass


class FieldOverflowError(PacketError):
    """A field value does not fit its declared width."""


class MalformedPacketError(PacketError):
    """Unknown type nibble on the wire."""


class TruncatedTransferError(PacketError):
    """AER deserialization received fewer than 4 bytes."""


def _check(name: str, value: int, lo: int, hi: int) -> int:
    if not lo <= value <= hi:
        raise FieldOverflowError(f"{name}={value} outside [{lo}, {hi}]")
    return value


@dataclass(frozen=True, slots=True)
class Config:
    core: int
    target: int     # 0 neuron mem, 1 synapse mem, 2 param bank
    byte_addr: int
    data: int


@dataclass(frozen=True, slots=True)
class MonReq:
    core: int
    target: int
    byte_addr: int


@dataclass(frozen=True, slots=True)
class MonReply:
    core: int
    byte_addr: int
    data: int


@dataclass(frozen=True, slots=True)
class SpikeL0:
    core: int
    axon: int


@dataclass(frozen=True, slots=True)
class SpikeL1:
    cores_mask: int
    neur: int


@dataclass(frozen=True, slots=True)
class SpikeL2:
    dx: int         # signed, |dx| <= 3
    dy: int         # signed, |dy| <= 3
    cores_mask: int
    syn: int        # 5-bit L2 synapse index
    neur: int       # 9-bit destination neuron
    d: int          # distance tag 0..7


@dataclass(frozen=True, slots=True)
class Virtual:
    core: int
    neur: int
    value: int      # signed 8-bit


@dataclass(frozen=True, slots=True)
class Teacher:
    cores_mask: int
    neur: int
    ca_value: int


@dataclass(frozen=True, slots=True)
class Leak:
    cores_mask: int


Event = Config | MonReq | MonReply | SpikeL0 | SpikeL1 | SpikeL2 | Virtual | Teacher | Leak


def _signmag3(name: str, v: int) -> int:
    """Pack a signed value in -3..+3 as {sign, mag[1:0]}; -0 normalizes to +0."""
    _check(name, v, -3, 3)
    if v >= 0:
        return v
    return 0b100 | (-v)


def _unsignmag3(bits: int) -> int:
    mag = bits & 0b011
    return -mag if bits & 0b100 else mag


def encode_packet(e: Event) -> int:
    if isinstance(e, Config):
        _check("core", e.core, 0, 3)
        _check("target", e.target, 0, 3)
        _check("byte_addr", e.byte_addr, 0, 0xFFFF)
        _check("data", e.data, 0, 0xFF)
        return (
            (PacketType.CONFIG << 28) | (e.core << 26) | (e.target << 24)
            | (e.byte_addr << 8) | e.data
        )
    if isinstance(e, MonReq):
        _check("core", e.core, 0, 3)
        _check("target", e.target, 0, 3)
        _check("byte_addr", e.byte_addr, 0, 0xFFFF)
        return (
            (PacketType.MON_REQ << 28) | (e.core << 26) | (e.target << 24)
            | (e.byte_addr << 8)
        )
    if isinstance(e, MonReply):
        _check("core", e.core, 0, 3)
        _check("byte_addr", e.byte_addr, 0, 0xFFFF)
        _check("data", e.data, 0, 0xFF)
        return (
            (PacketType.MON_REPLY << 28) | (e.core << 26)
            | (e.byte_addr << 8) | e.data
        )
    if isinstance(e, SpikeL0):
        _check("core", e.core, 0, 3)
        _check("axon", e.axon, 0, 511)
        return (PacketType.SPIKE_L0 << 28) | (e.core << 26) | e.axon
    if isinstance(e, SpikeL1):
        _check("cores_mask", e.cores_mask, 0, 0xF)
        _check("neur", e.neur, 0, 511)
        return (PacketType.SPIKE_L1 << 28) | (e.cores_mask << 24) | e.neur
    if isinstance(e, SpikeL2):
        dx = _signmag3("dx", e.dx)
        dy = _signmag3("dy", e.dy)
        _check("cores_mask", e.cores_mask, 0, 0xF)
        _check("syn", e.syn, 0, 31)
        _check("neur", e.neur, 0, 511)
        _check("d", e.d, 0, 7)
        return (
            (PacketType.SPIKE_L2 << 28) | (dx << 25) | (dy << 22)
            | (e.cores_mask << 18) | (e.syn << 13) | (e.neur << 4) | (e.d << 1)
        )
    if isinstance(e, Virtual):
        _check("core", e.core, 0, 3)
        _check("neur", e.neur, 0, 511)
        _check("value", e.value, -128, 127)
        return (
            (PacketType.VIRTUAL << 28) | (e.core << 26) | (e.neur << 8)
            | (e.value & 0xFF)
        )
    if isinstance(e, Teacher):
        _check("cores_mask", e.cores_mask, 0, 0xF)
        _check("neur", e.neur, 0, 511)
        _check("ca_value", e.ca_value, 0, 15)
        return (
            (PacketType.TEACHER << 28) | (e.cores_mask << 24) | (e.neur << 8)
            | e.ca_value
        )
    if isinstance(e, Leak):
        _check("cores_mask", e.cores_mask, 0, 0xF)
        return (PacketType.LEAK << 28) | (e.cores_mask << 24)
    raise TypeError(f"not a packet event: {e!r}")


def decode_packet(raw: int) -> Event:
    if not 0 <= raw <= 0xFFFFFFFF:
        raise MalformedPacketError(f"raw word {raw:#x} is not a 32-bit value")
    nibble = raw >> 28
    if nibble == PacketType.CONFIG:
        return Config(
            core=(raw >> 26) & 3, target=(raw >> 24) & 3,
            byte_addr=(raw >> 8) & 0xFFFF, data=raw & 0xFF,
        )
    if nibble == PacketType.MON_REQ:
        return MonReq(
            core=(raw >> 26) & 3, target=(raw >> 24) & 3,
            byte_addr=(raw >> 8) & 0xFFFF,
        )
    if nibble == PacketType.MON_REPLY:
        return MonReply(
            core=(raw >> 26) & 3, byte_addr=(raw >> 8) & 0xFFFF, data=raw & 0xFF,
        )
    if nibble == PacketType.SPIKE_L0:
        return SpikeL0(core=(raw >> 26) & 3, axon=raw & 0x1FF)
    if nibble == PacketType.SPIKE_L1:
        return SpikeL1(cores_mask=(raw >> 24) & 0xF, neur=raw & 0x1FF)
    if nibble == PacketType.SPIKE_L2:
        return SpikeL2(
            dx=_unsignmag3((raw >> 25) & 7), dy=_unsignmag3((raw >> 22) & 7),
            cores_mask=(raw >> 18) & 0xF, syn=(raw >> 13) & 0x1F,
            neur=(raw >> 4) & 0x1FF, d=(raw >> 1) & 7,
        )
    if nibble == PacketType.VIRTUAL:
        value = raw & 0xFF
        if value >= 128:
            value -= 256
        return Virtual(core=(raw >> 26) & 3, neur=(raw >> 8) & 0x1FF, value=value)
    if nibble == PacketType.TEACHER:
        return Teacher(
            cores_mask=(raw >> 24) & 0xF, neur=(raw >> 8) & 0x1FF,
            ca_value=raw & 0xF,
        )
    if nibble == PacketType.LEAK:
        return Leak(cores_mask=(raw >> 24) & 0xF)
    raise MalformedPacketError(f"unknown type nibble {nibble} in word {raw:#010x}")


def packet_type(raw: int) -> PacketType:
    nibble = raw >> 28
    try:
        return PacketType(nibble)
    except ValueError:
        raise MalformedPacketError(f"unknown type nibble {nibble}") from None


def packet_to_aer_bytes(raw: int) -> bytes:
    """Serialize one packet as four AER transactions, MSB first."""
    if not 0 <= raw <= 0xFFFFFFFF:
        raise FieldOverflowError(f"raw word {raw:#x} is not a 32-bit value")
    return raw.to_bytes(4, "big")


def aer_bytes_to_packet(data: bytes) -> int:
    if len(data) < 4:
        raise TruncatedTransferError(f"got {len(data)} AER bytes, need 4")
    return int.from_bytes(data[:4], "big")
