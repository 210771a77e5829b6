"""NeuronWord layout: 128-bit pack/unpack, byte images, field preservation."""
import random

import pytest

from spikemesh.neuronword import FIELDS, NeuronWord, WORD_BITS


def test_layout_is_contiguous_128_bits():
    spans = sorted((off, off + w) for off, w in FIELDS.values())
    assert spans[0][0] == 0
    for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
        assert a1 == b0, f"gap or overlap at bit {a1}"
    assert spans[-1][1] == WORD_BITS


def test_connectivity_is_27_bits():
    conn = ["conn_l1", "conn_chip_dx", "conn_chip_dy", "conn_cores",
            "conn_syn", "conn_neur"]
    assert sum(FIELDS[f][1] for f in conn) == 27


def _random_word(rng) -> NeuronWord:
    return NeuronWord(
        v_mem=rng.randrange(1 << 11), ca=rng.randrange(16),
        ca_cnt=rng.randrange(16), v_th=rng.randrange(1 << 11),
        theta_m=rng.randrange(1 << 11), theta_1=rng.randrange(16),
        theta_2=rng.randrange(16), theta_3=rng.randrange(16),
        ca_leak_period=rng.randrange(16),
        enabled=bool(rng.getrandbits(1)), plastic=bool(rng.getrandbits(1)),
        conn_l1=rng.randrange(8),
        conn_chip_dx=rng.randint(-3, 3), conn_chip_dy=rng.randint(-3, 3),
        conn_cores=rng.randrange(16), conn_syn=rng.randrange(32),
        conn_neur=rng.randrange(512), reserved=rng.randrange(1 << 10),
        l2_syn=rng.randrange(1 << 32),
    )


def test_pack_unpack_round_trip_random():
    rng = random.Random(42)
    for _ in range(20_000):
        w = _random_word(rng)
        assert NeuronWord.unpack(w.pack()) == w


def test_bytes_round_trip_preserves_reserved():
    w = NeuronWord(v_th=100, reserved=0x3AB, enabled=True)
    w2 = NeuronWord.from_bytes(w.to_bytes())
    assert w2.reserved == 0x3AB
    assert w2 == w


def test_byte_image_reflects_field():
    # v_th occupies bits [29:19]; write v_th and find it back in the raw image
    w = NeuronWord(v_th=0x5A5)
    raw = int.from_bytes(w.to_bytes(), "little")
    assert (raw >> 19) & 0x7FF == 0x5A5
    # l2_syn sits in the top 32 bits
    w = NeuronWord(l2_syn=0xDEADBEEF)
    raw = int.from_bytes(w.to_bytes(), "little")
    assert raw >> 96 == 0xDEADBEEF


def test_field_overflow_rejected():
    with pytest.raises(ValueError, match="v_mem"):
        NeuronWord(v_mem=2048).pack()
    with pytest.raises(ValueError, match="chip delta"):
        NeuronWord(conn_chip_dx=4).pack()


def test_theta_order_validated():
    NeuronWord(theta_1=2, theta_2=6, theta_3=9).validate()
    with pytest.raises(ValueError, match="theta order"):
        NeuronWord(theta_1=6, theta_2=2, theta_3=9).validate()


def test_flags_bits():
    w = NeuronWord(enabled=True, plastic=False)
    raw = w.pack()
    assert (raw >> 57) & 3 == 0b01
    w = NeuronWord(enabled=True, plastic=True)
    assert (w.pack() >> 57) & 3 == 0b11


def test_sign_magnitude_chip_delta():
    raw = NeuronWord(conn_chip_dx=-2, conn_chip_dy=3).pack()
    assert (raw >> 62) & 7 == 0b110      # sign bit + magnitude 2
    assert (raw >> 65) & 7 == 0b011
    assert NeuronWord.unpack(raw).conn_chip_dx == -2
