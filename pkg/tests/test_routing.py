"""Routing fabric unit tests: dimension-ordered steps, arbitration, the L1
mask expansion, the spike fan-out encoder, and AER link calibration."""
import pytest

from spikemesh.neuronword import NeuronWord
from spikemesh.packets import SpikeL1, SpikeL2
from spikemesh.routing import (
    PRIORITY, ROUND_ROBIN, AerLinkModel, ArbiterState, FifoBuffer, Port,
    arbiter_next, l0_encode, l1_expand_mask, l1_targets, l2_route,
)


def pkt(dx, dy, d=1):
    return SpikeL2(dx=dx, dy=dy, cores_mask=0b0011, syn=2, neur=9, d=d)


# -- dimension order ----------------------------------------------------------

def test_l2_route_x_before_y():
    out, p = l2_route(pkt(2, 1))
    assert out == Port.E and (p.dx, p.dy) == (1, 1) and p.d == 2
    out, p = l2_route(p)
    assert out == Port.E and (p.dx, p.dy) == (0, 1) and p.d == 3
    out, p = l2_route(p)
    assert out == Port.N and (p.dx, p.dy) == (0, 0) and p.d == 4
    out, p2 = l2_route(p)
    assert out is None and p2 == p           # local delivery, untouched


def test_l2_route_negative_axes():
    out, p = l2_route(pkt(-1, 0))
    assert out == Port.W and p.dx == 0
    out, p = l2_route(pkt(0, -2))
    assert out == Port.S and p.dy == -1


def test_l2_distance_saturates():
    p = pkt(3, 3, d=6)
    out, p = l2_route(p)
    assert p.d == 7
    out, p = l2_route(p)
    assert p.d == 7


def test_route_invariant_random_walks():
    import random
    rng = random.Random(5)
    for _ in range(500):
        p = pkt(rng.randint(-3, 3), rng.randint(-3, 3))
        hops = 0
        expect = abs(p.dx) + abs(p.dy)
        while True:
            out, p = l2_route(p)
            if out is None:
                break
            hops += 1
            assert hops <= 6
        assert hops == expect
        assert (p.cores_mask, p.syn, p.neur) == (0b0011, 2, 9)


# -- FIFO ----------------------------------------------------------------------

def test_fifo_order_capacity_and_high_water():
    f = FifoBuffer(3)
    for i in range(3):
        f.push(i)
    assert f.full and f.max_occupancy == 3
    with pytest.raises(OverflowError):
        f.push(99)
    assert [f.pop() for _ in range(3)] == [0, 1, 2]
    assert not f.full and len(f) == 0
    assert f.max_occupancy == 3
    with pytest.raises(ValueError):
        FifoBuffer(0)


# -- arbitration ----------------------------------------------------------------

def test_round_robin_rotation():
    a = ArbiterState(mode=ROUND_ROBIN)
    occ = [1, 1, 0, 1, 0]
    assert arbiter_next(a, occ) == Port.N      # first rotation starts at N
    assert arbiter_next(a, occ) == Port.E
    assert arbiter_next(a, occ) == Port.W      # skips empty S
    assert arbiter_next(a, occ) == Port.N      # wraps past empty L1
    assert arbiter_next(a, [0, 0, 0, 0, 0]) is None
    assert a.last_granted == Port.N            # grant state survives idle


def test_round_robin_single_port_repeats():
    a = ArbiterState(mode=ROUND_ROBIN)
    occ = [0, 0, 0, 0, 5]
    for _ in range(3):
        assert arbiter_next(a, occ) == Port.L1


def test_priority_max_occupancy_fixed_tiebreak():
    a = ArbiterState(mode=PRIORITY)
    assert arbiter_next(a, [1, 3, 2, 3, 0]) == Port.E   # tie E/W -> E first
    assert arbiter_next(a, [2, 2, 2, 2, 2]) == Port.N
    assert arbiter_next(a, [0, 0, 0, 0, 1]) == Port.L1
    assert arbiter_next(a, [0, 0, 0, 0, 0]) is None


def test_unknown_arbiter_mode():
    with pytest.raises(ValueError):
        arbiter_next(ArbiterState(mode="coinflip"), [1, 0, 0, 0, 0])


# -- L1 masks -------------------------------------------------------------------

def test_l1_expand_mask_examples():
    # bit k addresses the k-th other core in ascending order
    assert l1_expand_mask(0, 0b111) == 0b1110
    assert l1_expand_mask(3, 0b111) == 0b0111
    assert l1_expand_mask(2, 0b101) == 0b1001   # others of 2: [0,1,3] -> 0,3
    assert l1_expand_mask(1, 0b010) == 0b0100
    assert l1_expand_mask(0, 0) == 0


def test_l1_targets_excludes_source():
    p = SpikeL1(cores_mask=0b1111, neur=3)
    assert l1_targets(p, source_core=2) == [0, 1, 3]
    assert l1_targets(p, source_core=None) == [0, 1, 2, 3]


# -- spike fan-out ---------------------------------------------------------------

def test_l0_encode_fanout():
    w = NeuronWord(conn_l1=0b011, conn_chip_dx=-2, conn_chip_dy=1,
                   conn_cores=0b0110, conn_syn=7, conn_neur=300)
    local, l1, l2 = l0_encode(w, neuron_index=42, source_core=1,
                              l0_enable=True)
    assert local
    assert l1 == SpikeL1(cores_mask=0b0101, neur=42)   # others of 1: [0,2,3]
    assert l2 == SpikeL2(dx=-2, dy=1, cores_mask=0b0110, syn=7, neur=300, d=1)


def test_l0_encode_quiet_word():
    local, l1, l2 = l0_encode(NeuronWord(), 0, 0, l0_enable=False)
    assert not local and l1 is None and l2 is None


# -- AER link --------------------------------------------------------------------

def test_aer_link_calibration():
    link = AerLinkModel()
    assert link.cycles_per_packet == 24
    rate = link.packets_per_second(55e6)
    assert abs(rate - 2.29e6) / 2.29e6 < 0.02
    assert AerLinkModel(cycles_per_transaction=8).cycles_per_packet == 32
