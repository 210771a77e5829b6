"""Benchmark plumbing: IDX files, Poisson encoding, network builders,
readouts, and the oracle invariants of both benchmark networks."""
import json

import numpy as np
import pytest

from spikemesh.benchmarks import encode, idx, mnist, netbuild
from spikemesh.benchmarks import patterns as pat
from spikemesh.config import SystemConfig
from spikemesh.core import PB_AXON, TARGET_PARAM
from spikemesh.neuronword import NeuronWord
from spikemesh.packets import SpikeL0, Virtual
from spikemesh.system import System


# -- idx ---------------------------------------------------------------------

def test_idx_round_trip_plain_and_gz(tmp_path):
    for name in ("t.idx", "t.idx.gz"):
        for arr in (np.arange(24, dtype=np.uint8).reshape(2, 3, 4),
                    np.linspace(-1, 1, 6, dtype=np.float32).reshape(2, 3),
                    np.array([1, -2, 3], dtype=np.int32)):
            p = tmp_path / name
            idx.save_idx(p, arr)
            back = idx.load_idx(p)
            assert back.dtype == arr.dtype
            assert np.array_equal(back, arr)


def test_idx_rejects_corruption(tmp_path):
    p = tmp_path / "bad.idx"
    arr = np.arange(10, dtype=np.uint8)
    idx.save_idx(p, arr)
    raw = bytearray(p.read_bytes())
    raw[2] = 0x55                      # unknown type code
    p.write_bytes(bytes(raw))
    with pytest.raises(idx.IdxError):
        idx.load_idx(p)
    idx.save_idx(p, arr)
    p.write_bytes(p.read_bytes()[:-3])  # truncated payload
    with pytest.raises(idx.IdxError):
        idx.load_idx(p)


def test_idx_mnist_loader(tmp_path):
    images = np.arange(3 * 28 * 28, dtype=np.uint8).reshape(3, 28, 28)
    labels = np.array([3, 1, 4], dtype=np.uint8)
    idx.save_idx(tmp_path / "t10k-images-idx3-ubyte.gz", images)
    idx.save_idx(tmp_path / "t10k-labels-idx1-ubyte.gz", labels)
    imgs, labs = idx.load_mnist(tmp_path, "test")
    assert np.array_equal(imgs, images) and np.array_equal(labs, labels)
    with pytest.raises(FileNotFoundError):
        idx.load_mnist(tmp_path, "train")
    with pytest.raises(ValueError):
        idx.load_mnist(tmp_path, "validation")


# -- poisson encoder ----------------------------------------------------------

def test_poisson_deterministic_and_sorted():
    enc = encode.PoissonEncoder(50_000, max_rate_hz=5000.0)
    a = enc.encode([255, 128, 0, 30], seed=9)
    b = enc.encode([255, 128, 0, 30], seed=9)
    assert a == b
    assert a == sorted(a)
    assert enc.encode([255] * 4, seed=1) != enc.encode([255] * 4, seed=2)


def test_poisson_zero_rate_is_silent():
    enc = encode.PoissonEncoder(100_000, max_rate_hz=5000.0)
    assert enc.encode(np.zeros(10), seed=3) == []
    train = enc.encode([0, 255, 0], seed=4)
    assert train and all(axon == 1 for _, axon in train)


def test_poisson_mean_within_3_sigma():
    # one long window is one Poisson draw per pixel; aggregate over pixels
    enc = encode.PoissonEncoder(200_000, max_rate_hz=2000.0)
    inten = np.full(256, 200)
    lam = enc.expected_counts(inten)
    total_expect = lam.sum()
    train = enc.encode(inten, seed=77)
    sigma = np.sqrt(total_expect)
    assert abs(len(train) - total_expect) <= 3 * sigma


def test_poisson_times_within_window():
    enc = encode.PoissonEncoder(1234, max_rate_hz=100000.0)
    train = enc.encode([255], seed=5)
    assert train
    assert all(0 <= t < 1234 for t, _ in train)


def test_poisson_rejects_bad_args():
    with pytest.raises(ValueError):
        encode.PoissonEncoder(0)
    enc = encode.PoissonEncoder(1000)
    with pytest.raises(ValueError):
        enc.encode([256], seed=1)


# -- netbuild -----------------------------------------------------------------

def test_axon_byte_codes():
    assert netbuild.axon_byte(1) == 0
    assert netbuild.axon_byte(8) == 3
    assert netbuild.axon_byte(-1) == 4
    assert netbuild.axon_byte(-4) == 6
    for bad in (0, 3, 16, -5):
        with pytest.raises(ValueError):
            netbuild.axon_byte(bad)


def test_netbuild_writes_are_config_equivalent():
    """Bulk helpers and byte-wise CONFIG writes must land identical images."""
    sys_a = System(SystemConfig())
    sys_b = System(SystemConfig())
    ca, cb = sys_a.core((0, 0), 0), sys_b.core((0, 0), 0)

    netbuild.set_axon_factor(ca, 7, -2)
    cb.mem_write_byte(TARGET_PARAM, PB_AXON + 7, netbuild.axon_byte(-2))

    netbuild.set_row_targets(ca, 0, 3, [0, 17, 511])
    row = np.zeros(512, dtype=np.uint8)
    row[[0, 17, 511]] = 1
    for i, byte in enumerate(np.packbits(row, bitorder="little")):
        cb.mem_write_byte(1, 3 * 64 + i, int(byte))

    netbuild.set_row_range(ca, 3, 10, 20)
    netbuild.set_row_range(cb, 3, 10, 20)   # same helper; param plane shared

    w = NeuronWord(enabled=True, v_th=33, theta_2=2, theta_3=3)
    netbuild.write_neuron(ca, 5, w)
    for i, byte in enumerate(w.pack().to_bytes(16, "little")):
        cb.mem_write_byte(0, 5 * 16 + i, byte)

    assert np.array_equal(ca.neuron_bytes, cb.neuron_bytes)
    assert np.array_equal(ca.synapse_bytes, cb.synapse_bytes)
    assert np.array_equal(ca.param_bytes, cb.param_bytes)
    ca.params(), cb.params()
    assert np.array_equal(ca.sign_factor, cb.sign_factor)
    assert np.array_equal(ca.range_start, cb.range_start)
    assert np.array_equal(ca.range_end, cb.range_end)


def test_set_row_targets_rejects_out_of_range():
    core = System(SystemConfig()).core((0, 0), 0)
    with pytest.raises(ValueError):
        netbuild.set_row_targets(core, 0, 0, [512])


# -- mnist building blocks ------------------------------------------------------

def test_interleave_subsample_mapping():
    img = np.arange(784, dtype=np.uint8).reshape(28, 28)
    subs = mnist.interleave_subsample(img)
    assert subs.shape == (4, 14, 14)
    for a in range(2):
        for b in range(2):
            for r in (0, 5, 13):
                for c in (0, 7, 13):
                    assert subs[a * 2 + b][r, c] == img[2 * r + a, 2 * c + b]
    with pytest.raises(ValueError):
        mnist.interleave_subsample(np.zeros((14, 14)))


def test_interleave_tiles_partition_image():
    img = np.random.default_rng(0).integers(0, 256, (28, 28), dtype=np.uint8)
    subs = mnist.interleave_subsample(img)
    assert subs.sum() == img.sum()


def test_rate_readout_rules():
    assert mnist.rate_readout([0] * 10) == (0, True)
    assert mnist.rate_readout([0, 5, 5, 0, 0, 0, 0, 0, 0, 0]) == (1, False)
    assert mnist.rate_readout([9, 0, 0, 0, 0, 0, 0, 0, 0, 9]) == (0, False)
    with pytest.raises(ValueError):
        mnist.rate_readout([1, 2])


def test_rank_order_readout_rules():
    assert mnist.rank_order_readout([-1] * 10) == (0, True)
    firsts = [-1, 300, 200, -1, -1, -1, -1, -1, -1, -1]
    assert mnist.rank_order_readout(firsts) == (2, False)
    firsts = [-1, 200, 200, -1, -1, -1, -1, -1, -1, -1]
    assert mnist.rank_order_readout(firsts) == (1, False)   # tie -> lowest
    with pytest.raises(ValueError):
        mnist.rank_order_readout([1, 2, 3])


def test_mnist_weight_validation():
    rng = np.random.default_rng(1)
    w1 = rng.choice([-1, 1], size=(8, 196)).astype(np.int8)
    w2 = rng.choice([-1, 1], size=(10, 8)).astype(np.int8)
    core = System(SystemConfig()).core((0, 0), 0)
    with pytest.raises(ValueError):
        mnist.build_mnist_core(core, w1[:, :100], w2, 100, 10)
    with pytest.raises(ValueError):
        mnist.build_mnist_core(core, w1, w2[:, :4], 100, 10)
    bad = w1.copy()
    bad[0, 0] = 0
    with pytest.raises(ValueError):
        mnist.build_mnist_core(core, bad, w2, 100, 10)


def test_mnist_compensation_identity_exact():
    """Each input spike must contribute exactly w in {-1,+1}: the simulated
    membrane equals the integer dot product, with no rounding."""
    rng = np.random.default_rng(42)
    H = 24
    w1 = rng.choice([-1, 1], size=(H, 196)).astype(np.int8)
    w2 = rng.choice([-1, 1], size=(10, H)).astype(np.int8)
    sys_ = System(SystemConfig(scheduler_capacity=1024))
    core = sys_.core((0, 0), 0)
    mnist.build_mnist_core(core, w1, w2, v_th_hidden=2047, v_th_out=2047)

    t = 0
    for h in range(H):
        for _ in range(4):   # +508 offset keeps running sums off the floor
            sys_.inject(t, (0, 0),
                        Virtual(core=0, neur=mnist.HIDDEN_BASE + h, value=127))
            t += 1
    sys_.run_to_quiescence()

    counts = rng.integers(0, 4, size=196)
    t = sys_.t + 1
    for a in range(196):
        for _ in range(counts[a]):
            sys_.inject(t, (0, 0), SpikeL0(core=0, axon=a))
            t += 2500
    sys_.run_to_quiescence()

    got = np.array([core.neuron_word(mnist.HIDDEN_BASE + h).v_mem - 508
                    for h in range(H)])
    assert np.array_equal(got, w1 @ counts)


def test_mnist_second_layer_identity():
    """Hidden spikes must reach the outputs with exact signed weights."""
    rng = np.random.default_rng(3)
    H = 16
    w1 = rng.choice([-1, 1], size=(H, 196)).astype(np.int8)
    w2 = rng.choice([-1, 1], size=(10, H)).astype(np.int8)
    sys_ = System(SystemConfig(scheduler_capacity=1024))
    core = sys_.core((0, 0), 0)
    # hidden threshold 1 turns each hidden neuron into a spike relay
    mnist.build_mnist_core(core, w1, w2, v_th_hidden=1, v_th_out=2047)

    t = 0
    for o in range(10):
        for _ in range(4):
            sys_.inject(t, (0, 0),
                        Virtual(core=0, neur=mnist.OUTPUT_BASE + o, value=127))
            t += 1
    sys_.run_to_quiescence()

    # fire hidden neuron j exactly once per positive w1 contribution by
    # pulsing a pixel whose weight into j is +1
    fires = np.zeros(H, dtype=np.int64)
    t = sys_.t + 1
    for j in range(H):
        a = int(np.argmax(w1[j] == 1))
        sys_.inject(t, (0, 0), SpikeL0(core=0, axon=a))
        t += 5000
        fires += (w1[:, a] == 1)   # every relay with w=+1 on that pixel fires
    sys_.run_to_quiescence()

    got = np.array([core.neuron_word(mnist.OUTPUT_BASE + o).v_mem - 508
                    for o in range(10)])
    assert np.array_equal(got, w2 @ fires)


def test_mnist_classifier_runs_and_is_deterministic():
    rng = np.random.default_rng(5)
    H = 16
    weights = [(rng.choice([-1, 1], size=(H, 196)).astype(np.int8),
                rng.choice([-1, 1], size=(10, H)).astype(np.int8))
               for _ in range(4)]
    img = np.zeros((28, 28), dtype=np.uint8)
    img[8:20, 10:18] = 200
    clf = mnist.MnistClassifier(weights, v_th_hidden=20, v_th_out=10,
                                duration_cycles=60_000, max_rate_hz=2000.0)
    s1 = clf.classify_rate(img, label=3, sample_seed=1)
    s2 = clf.classify_rate(img, label=3, sample_seed=1)
    assert (s1.pred, s1.counts, s1.wall_cycles, s1.sops) == \
           (s2.pred, s2.counts, s2.wall_cycles, s2.sops)
    assert s1.energy_uj > 0
    r = clf.classify_rank(img, label=3, sample_seed=1)
    assert r.wall_cycles <= s1.wall_cycles
    assert r.energy_uj <= s1.energy_uj


def test_mnist_csv_output(tmp_path):
    summary = mnist.MnistSummary(coding="rate")
    summary.add(mnist.MnistSample(1, 1, False, [0, 4] + [0] * 8,
                                  1000, 50, 0.25))
    p = tmp_path / "r.csv"
    mnist.write_results_csv(p, summary)
    lines = p.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("index,label,pred,correct")
    assert lines[1].startswith("0,1,1,1,0,1000,50,")


# -- 8-pattern network ----------------------------------------------------------

def test_pattern_data_files():
    kernels = pat.load_kernels()
    assert len(kernels) == 4
    for k in kernels:
        assert k.shape == (7, 7) and k.sum() == 7
    # orientations: center row, anti-diagonal, center column, main diagonal
    assert kernels[0][3].sum() == 7
    assert all(kernels[1][r, 6 - r] == 1 for r in range(7))
    assert kernels[2][:, 3].sum() == 7
    assert all(kernels[3][r, r] == 1 for r in range(7))
    pats = pat.load_patterns()
    assert [p["class"] for p in pats] == list(range(8))
    for p in pats:
        assert p["grid"].shape == (16, 16)
        assert p["grid"].sum() >= 11


def test_pattern_pool_signatures_disjoint_within_orientation():
    """The two patterns of each orientation must excite disjoint pool sets
    on their core, otherwise the classifier cannot separate them."""
    kernels = pat.load_kernels()
    pats = pat.load_patterns()
    by_orient = {}
    for p in pats:
        k = {"0": 0, "45": 1, "90": 2, "135": 3}[p["orientation"]]
        conv = pat.conv_oracle(p["grid"].astype(np.int64), kernels[k])
        pools = {(i // 2, j // 2) for i, j in np.argwhere(conv >= 5)}
        assert len(pools) >= 3
        by_orient.setdefault(k, []).append(pools)
    for k, (a, b) in by_orient.items():
        assert not (a & b), f"orientation {k} pool sets overlap"


def test_pattern_conv_layer_matches_dense_oracle():
    """With firing disabled, conv membranes equal the dense correlation of
    per-pixel spike counts with the orientation kernel."""
    net = pat.PatternNetwork(seed=3)
    sys_ = net.system
    for k in range(4):
        core = sys_.core((0, 0), k)
        for i in range(pat.CONV_W):
            for j in range(pat.CONV_W):
                netbuild.write_neuron(core, pat.conv_index(i, j),
                                      NeuronWord(enabled=True, v_th=2047))
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 3, size=256)
    sys_.reset_run_state()
    t = 0
    for a in range(256):
        for _ in range(counts[a]):
            for k in range(4):
                sys_.inject(t, (0, 0), SpikeL0(core=k, axon=a))
            t += 1
    sys_.run_to_quiescence()
    grid = counts.reshape(16, 16)
    for k in range(4):
        oracle = pat.conv_oracle(grid, net.kernels[k])
        core = sys_.core((0, 0), k)
        got = np.array([[core.neuron_word(pat.conv_index(i, j)).v_mem
                         for j in range(pat.CONV_W)]
                        for i in range(pat.CONV_W)])
        assert np.array_equal(got, oracle), f"core {k}"


def test_pattern_network_learns_quickly():
    """Abbreviated online-learning run: one seed, a few trials per class."""
    net = pat.PatternNetwork(seed=1)
    net.train()
    res = net.test(3, seed=1)
    assert res.n == 24
    assert res.accuracy == 1.0
    assert res.n_flagged == 0
    # learned code: each class's column contains its own pools
    bits = net.fc_weight_bits()
    assert bits.shape == (100, 8)


def test_pattern_learned_weights_are_class_specific():
    net = pat.PatternNetwork(seed=2)
    net.train()
    kernels = net.kernels
    bits = net.fc_weight_bits()
    rows = net._fc_rows()
    row_pos = {(l01, r): i for i, (l01, r) in enumerate(rows)}
    for p in net.patterns:
        c = p["class"]
        k = {"0": 0, "45": 1, "90": 2, "135": 3}[p["orientation"]]
        conv = pat.conv_oracle(p["grid"].astype(np.int64), kernels[k])
        pools = {(i // 2, j // 2) for i, j in np.argwhere(conv >= 5)}
        for pi, pj in pools:
            idx_ = pat.pool_index(k, pi, pj)
            r = row_pos[(0 if k == 0 else 1, idx_)]
            assert bits[r, c] == 1, f"class {c} missing pool ({pi},{pj})"
            others = [bits[r, o] for o in range(8) if o != c]
            assert sum(others) == 0, f"class {c} pool ({pi},{pj}) leaked"
