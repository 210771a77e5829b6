"""8-pattern online-learning benchmark: a fixed conv/pool front-end feeding
eight plastic classifier neurons that learn with the on-chip stochastic rule.

Topology (one chip, all four cores):

    core k applies orientation kernel k (0/45/90/135 degrees) to the shared
    16x16 input:
        axons   0..255    input pixels (row-major), broadcast to all cores
        neurons 256..355  10x10 valid conv map, one pool parent each
        neurons 356+25k .. 380+25k   5x5 2x2-pooled map (indices are offset
                          per core so their L1 rows never collide on core 0)
    pool spikes converge on core 0: cores 1..3 route via the L1 star, core
    0's own pools use their local rows.  Core 0 additionally hosts the
    classifier:
        neurons 481..488  8 plastic outputs, swept only by pool rows

Discrimination front-end: a periodic leak drains coincidence-free inputs, so
conv neurons off the pattern's orientation never reach threshold while conv
neurons along the bar race past it.  Pool and classifier thresholds of 1 make
them spike relays, immune to leak between sparse arrivals.

Training uses the stochastic-plasticity regimes directly: the teacher pins
the correct neuron's calcium into the potentiation-only band and drives its
membrane above theta_m with periodic virtual excitation, while wrong neurons
sit in the depression-only band with a resting membrane.  Every pool spike
then potentiates the correct neuron's synapse and depresses the others'.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .encode import PoissonEncoder
from .netbuild import (
    set_flags, set_q, set_leak_step, set_row_range, set_row_targets,
    write_neuron,
)
from ..config import SystemConfig
from ..neuronword import NeuronWord
from ..packets import Leak, SpikeL0, Teacher, Virtual
from ..system import System

GRID = 16
N_PIXELS = GRID * GRID          # axons 0..255
CONV_BASE = 256
CONV_W = 10                     # 16 - 7 + 1
N_CONV = CONV_W * CONV_W
POOL_BASE = 356
POOL_W = 5
N_POOL = POOL_W * POOL_W        # per core, indices offset by 25*core
FC_BASE = 481
N_FC = 8


def _load_data(name: str) -> dict:
    ref = resources.files("spikemesh") / "data" / name
    return json.loads(ref.read_text())


def load_kernels() -> list[np.ndarray]:
    d = _load_data("kernels7.json")
    return [np.asarray(d["kernels"][o], dtype=np.uint8)
            for o in d["orientations"]]


def load_patterns() -> list[dict]:
    d = _load_data("patterns8.json")
    pats = sorted(d["patterns"], key=lambda p: p["class"])
    for p in pats:
        p["grid"] = np.asarray(p["grid"], dtype=np.uint8)
    return pats


def conv_index(i: int, j: int) -> int:
    return CONV_BASE + i * CONV_W + j

def pool_index(core: int, pi: int, pj: int) -> int:
    return POOL_BASE + 25 * core + pi * POOL_W + pj


def conv_oracle(grid: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Dense valid correlation of a 16x16 map with a 7x7 kernel."""
    out = np.zeros((CONV_W, CONV_W), dtype=np.int64)
    for i in range(CONV_W):
        for j in range(CONV_W):
            out[i, j] = int((grid[i:i + 7, j:j + 7] * kernel).sum())
    return out


@dataclass
class PatternNetConfig:
    v_th_conv: int = 12
    v_th_pool: int = 1
    v_th_fc_train: int = 2047
    v_th_fc_test: int = 1
    theta_m: int = 100
    theta_1: int = 1
    theta_2: int = 8
    theta_3: int = 15
    ca_correct: int = 12        # potentiation-only band [theta_2, theta_3)
    ca_wrong: int = 5           # depression-only band  [theta_1, theta_2)
    ca_leak_period: int = 15
    q_up: int = 384
    q_dn: int = 384
    leak_step: int = 1
    leak_every: int = 4096      # cycles between leak broadcasts
    window_cycles: int = 200_000
    max_rate_hz: float = 4400.0  # ~16 expected spikes per lit pixel
    f_clk_mhz: float = 55.0
    virtual_pump: int = 120
    pump_every: int = 16384
    epochs: int = 3
    scheduler_capacity: int = 8192


class PatternNetwork:
    """One chip, four orientation cores, online-learned 8-way classifier."""

    def __init__(self, cfg: PatternNetConfig | None = None, *, seed: int = 1):
        self.cfg = cfg or PatternNetConfig()
        self.seed = seed
        self.kernels = load_kernels()
        self.patterns = load_patterns()
        self.system = System(SystemConfig(
            grid_width=1, grid_height=1, f_clk_mhz=self.cfg.f_clk_mhz,
            scheduler_capacity=self.cfg.scheduler_capacity))
        self.encoder = PoissonEncoder(self.cfg.window_cycles,
                                      self.cfg.max_rate_hz,
                                      self.cfg.f_clk_mhz)
        self._fc_counts = np.zeros(N_FC, dtype=np.int64)
        self._build()
        self.system.spike_hook = self._on_spike

    # -- construction -----------------------------------------------------

    def _build(self) -> None:
        cfg = self.cfg
        rng = np.random.default_rng(self.seed)
        for k in range(4):
            core = self.system.core((0, 0), k)
            self._build_front_end(core, k)
            set_q(core, cfg.q_up, cfg.q_dn)
            set_leak_step(core, cfg.leak_step)
            set_flags(core, l0_enable=True, plasticity=False, range_opt=True)
        self._build_classifier(rng)

    def _build_front_end(self, core, k: int) -> None:
        cfg = self.cfg
        kernel = self.kernels[k]
        ones = np.argwhere(kernel == 1)

        # input pixel (r, c) feeds conv (r-kr, c-kc) for every kernel tap
        targets = [[] for _ in range(N_PIXELS)]
        for i in range(CONV_W):
            for j in range(CONV_W):
                ci = conv_index(i, j)
                for kr, kc in ones:
                    targets[(i + int(kr)) * GRID + (j + int(kc))].append(ci)
        for a in range(N_PIXELS):
            set_row_targets(core, 0, a, targets[a])
            set_row_range(core, a, CONV_BASE, CONV_BASE + N_CONV - 1)

        # conv -> its single pool parent; pools forward to the classifier
        for i in range(CONV_W):
            for j in range(CONV_W):
                ci = conv_index(i, j)
                pi = pool_index(k, i // 2, j // 2)
                set_row_targets(core, 0, ci, [pi])
                set_row_range(core, ci, pi, pi)
                write_neuron(core, ci, NeuronWord(
                    enabled=True, v_th=cfg.v_th_conv,
                    ca_leak_period=cfg.ca_leak_period))
        for pi in range(POOL_BASE + 25 * k, POOL_BASE + 25 * k + N_POOL):
            conn_l1 = 0 if k == 0 else 0b001   # first other core is core 0
            write_neuron(core, pi, NeuronWord(
                enabled=True, v_th=cfg.v_th_pool, conn_l1=conn_l1,
                ca_leak_period=cfg.ca_leak_period))
            # core 0 pools reach the classifier through their own local row;
            # remote pools' local rows must stay silent
            if k == 0:
                set_row_targets(core, 0, pi, [])   # bits set during FC init
                set_row_range(core, pi, FC_BASE, FC_BASE + N_FC - 1)
            else:
                set_row_range(core, pi, 511, 511)

    def _fc_rows(self) -> list[tuple[int, int]]:
        """(l01, axon) of every row that can sweep the classifier."""
        rows = [(0, pool_index(0, pi, pj))
                for pi in range(POOL_W) for pj in range(POOL_W)]
        for k in range(1, 4):
            rows += [(1, pool_index(k, pi, pj))
                     for pi in range(POOL_W) for pj in range(POOL_W)]
        return rows

    def _build_classifier(self, rng) -> None:
        cfg = self.cfg
        core0 = self.system.core((0, 0), 0)
        for l01, row in self._fc_rows():
            bits = rng.integers(0, 2, size=N_FC)
            dests = [FC_BASE + f for f in range(N_FC) if bits[f]]
            set_row_targets(core0, l01, row, dests)
            set_row_range(core0, l01 * 512 + row, FC_BASE, FC_BASE + N_FC - 1)
        for f in range(N_FC):
            self._write_fc(f, v_th=cfg.v_th_fc_train, plastic=True)
            set_row_range(core0, FC_BASE + f, 511, 511)

    def _write_fc(self, f: int, *, v_th: int, plastic: bool) -> None:
        cfg = self.cfg
        write_neuron(self.system.core((0, 0), 0), FC_BASE + f, NeuronWord(
            enabled=True, plastic=plastic, v_th=v_th, theta_m=cfg.theta_m,
            theta_1=cfg.theta_1, theta_2=cfg.theta_2, theta_3=cfg.theta_3,
            ca_leak_period=cfg.ca_leak_period))

    # -- presentation machinery --------------------------------------------

    def _on_spike(self, t, coord, core_idx, n):
        if core_idx == 0 and FC_BASE <= n < FC_BASE + N_FC:
            self._fc_counts[n - FC_BASE] += 1

    def _inject_pattern(self, grid: np.ndarray, sample_seed: int,
                        t0: int) -> None:
        train = self.encoder.encode(grid.reshape(-1) * 255, seed=sample_seed)
        for t, axon in train:
            for k in range(4):
                self.system.inject(t0 + t, (0, 0), SpikeL0(core=k, axon=axon))
        for t in range(0, self.cfg.window_cycles, self.cfg.leak_every):
            self.system.inject(t0 + t, (0, 0), Leak(cores_mask=0b1111))

    # -- training -----------------------------------------------------------

    def train(self) -> None:
        cfg = self.cfg
        rng = np.random.default_rng(self.seed + 0x5EED)
        for k in range(4):
            set_flags(self.system.core((0, 0), k), l0_enable=True,
                      plasticity=(k == 0), range_opt=True)
        order = np.arange(len(self.patterns))
        presentation = 0
        for _ in range(cfg.epochs):
            rng.shuffle(order)
            for c in order:
                self._train_one(int(c), int(rng.integers(1 << 31)))
                presentation += 1
        for k in range(4):
            set_flags(self.system.core((0, 0), k), l0_enable=True,
                      plasticity=False, range_opt=True)
        for f in range(N_FC):
            self._write_fc(f, v_th=cfg.v_th_fc_test, plastic=False)

    def _train_one(self, c: int, sample_seed: int) -> None:
        cfg = self.cfg
        sys_ = self.system
        sys_.reset_run_state()
        for f in range(N_FC):
            ca = cfg.ca_correct if f == c else cfg.ca_wrong
            sys_.inject(0, (0, 0), Teacher(cores_mask=0b0001,
                                           neur=FC_BASE + f, ca_value=ca))
        for t in range(0, cfg.window_cycles, cfg.pump_every):
            sys_.inject(t, (0, 0), Virtual(core=0, neur=FC_BASE + c,
                                           value=cfg.virtual_pump))
        self._inject_pattern(self.patterns[c]["grid"], sample_seed, t0=64)
        sys_.run_to_quiescence()

    # -- evaluation ----------------------------------------------------------

    def classify(self, grid: np.ndarray, sample_seed: int) -> tuple[int, bool]:
        """(predicted class, no_spike flag) for one Poisson realization."""
        sys_ = self.system
        sys_.reset_run_state()
        self._fc_counts[:] = 0
        self._inject_pattern(grid, sample_seed, t0=0)
        sys_.run_to_quiescence()
        if self._fc_counts.sum() == 0:
            return 0, True
        return int(np.argmax(self._fc_counts)), False

    def test(self, trials_per_class: int, *, seed: int = 0) -> "PatternTestResult":
        rng = np.random.default_rng(seed + 0xC1A55)
        result = PatternTestResult()
        for c, pat in enumerate(self.patterns):
            for _ in range(trials_per_class):
                pred, flagged = self.classify(
                    pat["grid"], int(rng.integers(1 << 31)))
                result.add(c, pred, flagged)
        return result

    def fc_weight_bits(self) -> np.ndarray:
        """Learned classifier bits, shape (100 pool rows, 8)."""
        core0 = self.system.core((0, 0), 0)
        out = np.zeros((len(self._fc_rows()), N_FC), dtype=np.uint8)
        for r, (l01, row) in enumerate(self._fc_rows()):
            base = (l01 * 512 + row) * 64
            row_bytes = core0.synapse_bytes[base:base + 64]
            bits = np.unpackbits(row_bytes, bitorder="little")
            out[r] = bits[FC_BASE:FC_BASE + N_FC]
        return out


@dataclass
class PatternTestResult:
    n: int = 0
    n_correct: int = 0
    n_flagged: int = 0
    confusion: np.ndarray = field(
        default_factory=lambda: np.zeros((N_FC, N_FC), dtype=np.int64))

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else 0.0

    def add(self, label: int, pred: int, flagged: bool) -> None:
        self.n += 1
        self.n_correct += int(pred == label and not flagged)
        self.n_flagged += int(flagged)
        self.confusion[label, pred] += 1


def run_8pattern(seed: int, trials_per_class: int = 100,
                 cfg: PatternNetConfig | None = None) -> PatternTestResult:
    """Build, train online, then test; the whole benchmark for one seed."""
    net = PatternNetwork(cfg, seed=seed)
    net.train()
    return net.test(trials_per_class, seed=seed)
