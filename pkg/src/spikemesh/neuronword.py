"""128-bit per-neuron memory word: pack/unpack against the frozen bit layout.

Layout, bit 0 upward — single source of truth:

    v_mem[10:0]  ca[14:11]  ca_cnt[18:15]           LIF + Calcium state (19 b)
    v_th[29:19]  theta_m[40:30]  theta_1[44:41]
    theta_2[48:45]  theta_3[52:49]
    ca_leak_period[56:53]  flags[58:57]              parameters (40 b)
    conn_l1[61:59]  conn_chip_dx[64:62]
    conn_chip_dy[67:65]  conn_cores[71:68]
    conn_syn[76:72]  conn_neur[85:77]                connectivity (27 b)
    reserved[95:86]                                  preserved verbatim (10 b)
    l2_syn[127:96]                                   32 x 1-bit L2 weights

flags bit 57 = neuron enable, bit 58 = plasticity enable.  conn_chip_dx/dy are
sign-magnitude (sign in the high bit).  The byte image of a word is little-endian:
byte 0 holds bits [7:0].  Neuron memory is 512 words = 8192 bytes per core.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

# (offset, width) per field; unsigned raw storage
FIELDS = {
    "v_mem": (0, 11),
    "ca": (11, 4),
    "ca_cnt": (15, 4),
    "v_th": (19, 11),
    "theta_m": (30, 11),
    "theta_1": (41, 4),
    "theta_2": (45, 4),
    "theta_3": (49, 4),
    "ca_leak_period": (53, 4),
    "flags": (57, 2),
    "conn_l1": (59, 3),
    "conn_chip_dx": (62, 3),
    "conn_chip_dy": (65, 3),
    "conn_cores": (68, 4),
    "conn_syn": (72, 5),
    "conn_neur": (77, 9),
    "reserved": (86, 10),
    "l2_syn": (96, 32),
}

WORD_BITS = 128
WORD_BYTES = 16

FLAG_ENABLE = 1
FLAG_PLASTIC = 2


def _signmag3_pack(v: int) -> int:
    if not -3 <= v <= 3:
        raise ValueError(f"chip delta {v} outside [-3, 3]")
    return v if v >= 0 else (0b100 | -v)


def _signmag3_unpack(bits: int) -> int:
    mag = bits & 0b011
    return -mag if bits & 0b100 else mag


@dataclass(slots=True)
class NeuronWord:
    """Decoded view of one 128-bit neuron word."""
    v_mem: int = 0
    ca: int = 0
    ca_cnt: int = 0
    v_th: int = 0
    theta_m: int = 0
    theta_1: int = 0
    theta_2: int = 0
    theta_3: int = 0
    ca_leak_period: int = 0
    enabled: bool = False
    plastic: bool = False
    conn_l1: int = 0
    conn_chip_dx: int = 0     # signed -3..+3
    conn_chip_dy: int = 0     # signed -3..+3
    conn_cores: int = 0
    conn_syn: int = 0
    conn_neur: int = 0
    reserved: int = 0
    l2_syn: int = 0           # 32-bit weight vector, bit i = synapse i

    def validate(self) -> "NeuronWord":
        """Configuration-time checks (theta ordering and field widths)."""
        self.pack()
        if not self.theta_1 <= self.theta_2 <= self.theta_3:
            raise ValueError(
                f"theta order violated: {self.theta_1} <= {self.theta_2} "
                f"<= {self.theta_3} required"
            )
        return self

    def pack(self) -> int:
        raw = 0
        values = {
            "v_mem": self.v_mem, "ca": self.ca, "ca_cnt": self.ca_cnt,
            "v_th": self.v_th, "theta_m": self.theta_m,
            "theta_1": self.theta_1, "theta_2": self.theta_2,
            "theta_3": self.theta_3, "ca_leak_period": self.ca_leak_period,
            "flags": (FLAG_ENABLE if self.enabled else 0)
                     | (FLAG_PLASTIC if self.plastic else 0),
            "conn_l1": self.conn_l1,
            "conn_chip_dx": _signmag3_pack(self.conn_chip_dx),
            "conn_chip_dy": _signmag3_pack(self.conn_chip_dy),
            "conn_cores": self.conn_cores, "conn_syn": self.conn_syn,
            "conn_neur": self.conn_neur, "reserved": self.reserved,
            "l2_syn": self.l2_syn,
        }
        for name, (offset, width) in FIELDS.items():
            v = values[name]
            if not 0 <= v < (1 << width):
                raise ValueError(f"{name}={v} does not fit {width} bits")
            raw |= v << offset
        return raw

    @classmethod
    def unpack(cls, raw: int) -> "NeuronWord":
        if not 0 <= raw < (1 << WORD_BITS):
            raise ValueError(f"raw word does not fit {WORD_BITS} bits")
        get = lambda name: (raw >> FIELDS[name][0]) & ((1 << FIELDS[name][1]) - 1)
        flags = get("flags")
        return cls(
            v_mem=get("v_mem"), ca=get("ca"), ca_cnt=get("ca_cnt"),
            v_th=get("v_th"), theta_m=get("theta_m"),
            theta_1=get("theta_1"), theta_2=get("theta_2"),
            theta_3=get("theta_3"), ca_leak_period=get("ca_leak_period"),
            enabled=bool(flags & FLAG_ENABLE), plastic=bool(flags & FLAG_PLASTIC),
            conn_l1=get("conn_l1"),
            conn_chip_dx=_signmag3_unpack(get("conn_chip_dx")),
            conn_chip_dy=_signmag3_unpack(get("conn_chip_dy")),
            conn_cores=get("conn_cores"), conn_syn=get("conn_syn"),
            conn_neur=get("conn_neur"), reserved=get("reserved"),
            l2_syn=get("l2_syn"),
        )

    def to_bytes(self) -> bytes:
        return self.pack().to_bytes(WORD_BYTES, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> "NeuronWord":
        if len(data) != WORD_BYTES:
            raise ValueError(f"neuron word needs {WORD_BYTES} bytes, got {len(data)}")
        return cls.unpack(int.from_bytes(data, "little"))
