"""Quad-core MNIST classifier benchmark.

Each 28x28 digit is split by pixel interleaving into four 14x14 sub-images,
one per core.  Every core runs an independent 196 -> H -> 10 feed-forward
network with signed binary weights (+1/-1); the four cores vote by summing
their output activity (ensemble readout).

Signed weights on a unipolar crossbar
-------------------------------------
The stored synapse bits are b = (w+1)/2 in {0,1}, so a direct sweep delivers
sum(b*x) instead of sum(w*x).  The identity sum(w*x) = 2*sum(b*x) - sum(x)
is restored structurally per layer:

  * every input row carries axon factor +2 and also targets a compensation
    neuron (all-ones input column, firing threshold 2), so the compensation
    neuron fires once per presynaptic spike;
  * the compensation neuron's own row is all-ones over the layer with axon
    factor -1, delivering the -sum(x) term.

Net effect: each presynaptic spike contributes exactly w in {-1,+1} to every
destination neuron, with no rounding.  The membrane floor at zero is the one
remaining nonlinearity; threshold calibration absorbs it.

Readouts: ``rate`` counts output spikes over the full window, ``rank`` stops
at the first output spike (cheaper, and the early stop is where its energy
advantage comes from).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encode import PoissonEncoder
from .netbuild import (
    set_axon_factor, set_flags, set_row_range, set_row_targets, write_neuron,
)
from ..config import SystemConfig
from ..neuronword import NeuronWord
from ..packets import SpikeL0
from ..power import PRESETS, PowerParams, energy_breakdown
from ..system import System

N_INPUT = 196          # 14*14 pixels = L0 axons 0..195
HIDDEN_BASE = 196      # hidden neurons start here
MAX_HIDDEN = 300
OUTPUT_BASE = 496      # outputs 496..505 = classes 0..9
N_CLASSES = 10
COMP_IN = 506          # input-layer compensation neuron
COMP_OUT = 507         # hidden-layer compensation neuron


def interleave_subsample(image) -> np.ndarray:
    """Split a 28x28 image into four interleaved 14x14 sub-images.

    Pixel (2r+a, 2c+b) of the source lands at (r, c) of sub-image (a, b),
    which is handled by core a*2 + b.
    """
    img = np.asarray(image)
    if img.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got {img.shape}")
    subs = np.empty((4, 14, 14), dtype=img.dtype)
    for a in range(2):
        for b in range(2):
            subs[a * 2 + b] = img[a::2, b::2]
    return subs


def _check_weights(w1, w2):
    w1 = np.asarray(w1, dtype=np.int8)
    w2 = np.asarray(w2, dtype=np.int8)
    n_hidden = w1.shape[0]
    if w1.ndim != 2 or w1.shape[1] != N_INPUT:
        raise ValueError(f"w1 must be (H, {N_INPUT}), got {w1.shape}")
    if w2.shape != (N_CLASSES, n_hidden):
        raise ValueError(f"w2 must be ({N_CLASSES}, {n_hidden}), got {w2.shape}")
    if n_hidden < 1 or n_hidden > MAX_HIDDEN:
        raise ValueError(f"hidden size {n_hidden} outside [1, {MAX_HIDDEN}]")
    for name, w in (("w1", w1), ("w2", w2)):
        vals = set(np.unique(w).tolist())
        if not vals <= {-1, 1}:
            raise ValueError(f"{name} must be signed binary, found {vals}")
    return w1, w2, n_hidden


def build_mnist_core(core, w1, w2, v_th_hidden: int, v_th_out: int) -> None:
    """Program one core with a 196 -> H -> 10 signed-binary network."""
    w1, w2, n_hidden = _check_weights(w1, w2)
    hidden = np.arange(HIDDEN_BASE, HIDDEN_BASE + n_hidden)

    # axon factors: direct paths at +2, compensation rows at -1
    for a in range(N_INPUT):
        set_axon_factor(core, a, 2)
    for h in hidden:
        set_axon_factor(core, int(h), 2)
    set_axon_factor(core, COMP_IN, -1)
    set_axon_factor(core, COMP_OUT, -1)

    # synapse rows (L0 half). Input row a: hidden units with w=+1, plus the
    # all-ones compensation column.  Hidden self-row: outputs with w=+1 plus
    # the output-side compensation column.
    for a in range(N_INPUT):
        dests = (hidden[w1[:, a] == 1]).tolist() + [COMP_IN]
        set_row_targets(core, 0, a, dests)
    set_row_targets(core, 0, COMP_IN, hidden.tolist())
    for j, h in enumerate(hidden):
        dests = [OUTPUT_BASE + o for o in range(N_CLASSES) if w2[o, j] == 1]
        set_row_targets(core, 0, int(h), dests + [COMP_OUT])
    set_row_targets(core, 0, COMP_OUT,
                    [OUTPUT_BASE + o for o in range(N_CLASSES)])

    # range table: sweep only the destinations each row can actually reach
    last_hidden = HIDDEN_BASE + n_hidden - 1
    for a in range(N_INPUT):
        set_row_range(core, a, HIDDEN_BASE, COMP_IN)
    set_row_range(core, COMP_IN, HIDDEN_BASE, last_hidden)
    for h in hidden:
        set_row_range(core, int(h), OUTPUT_BASE, COMP_OUT)
    set_row_range(core, COMP_OUT, OUTPUT_BASE, OUTPUT_BASE + N_CLASSES - 1)
    for o in range(N_CLASSES):
        set_row_range(core, OUTPUT_BASE + o, 511, 511)

    for h in hidden:
        write_neuron(core, int(h), NeuronWord(
            enabled=True, v_th=v_th_hidden, ca_leak_period=15))
    for o in range(N_CLASSES):
        write_neuron(core, OUTPUT_BASE + o, NeuronWord(
            enabled=True, v_th=v_th_out, ca_leak_period=15))
    for comp in (COMP_IN, COMP_OUT):
        write_neuron(core, comp, NeuronWord(
            enabled=True, v_th=2, ca_leak_period=15))

    set_flags(core, l0_enable=True, plasticity=False, range_opt=True)


def rate_readout(counts) -> tuple[int, bool]:
    """(predicted class, no_spikes flag).  Ties resolve to the lowest class;
    a silent network reports class 0 with the flag set."""
    counts = np.asarray(counts)
    if counts.shape != (N_CLASSES,):
        raise ValueError(f"expected {N_CLASSES} counts, got {counts.shape}")
    if counts.sum() == 0:
        return 0, True
    return int(np.argmax(counts)), False


def rank_order_readout(first_cycles) -> tuple[int, bool]:
    """(predicted class, no_decision flag) from per-class first-spike cycles.

    ``first_cycles[c]`` is the cycle of class c's first output spike, or a
    negative value when it never spiked.  Earliest spike wins; a same-cycle
    tie resolves to the lowest class index.
    """
    firsts = np.asarray(first_cycles, dtype=np.int64)
    if firsts.shape != (N_CLASSES,):
        raise ValueError(f"expected {N_CLASSES} entries, got {firsts.shape}")
    valid = firsts >= 0
    if not valid.any():
        return 0, True
    masked = np.where(valid, firsts, np.iinfo(np.int64).max)
    return int(np.argmin(masked)), False


@dataclass
class MnistSample:
    pred: int
    label: int
    flagged: bool              # no output spike (rate) / no decision (rank)
    counts: list               # per-class ensemble spike counts
    wall_cycles: int
    sops: int
    energy_uj: float

    @property
    def correct(self) -> bool:
        return self.pred == self.label


@dataclass
class MnistSummary:
    coding: str
    n: int = 0
    n_correct: int = 0
    n_flagged: int = 0
    total_energy_uj: float = 0.0
    total_cycles: int = 0
    total_sops: int = 0
    samples: list = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else 0.0

    @property
    def mean_energy_uj(self) -> float:
        return self.total_energy_uj / self.n if self.n else 0.0

    def add(self, s: MnistSample) -> None:
        self.n += 1
        self.n_correct += int(s.correct)
        self.n_flagged += int(s.flagged)
        self.total_energy_uj += s.energy_uj
        self.total_cycles += s.wall_cycles
        self.total_sops += s.sops
        self.samples.append(s)


class MnistClassifier:
    """Four independently-weighted cores on one chip, ensemble readout."""

    def __init__(self, weights, v_th_hidden: int, v_th_out: int, *,
                 duration_cycles: int = 1 << 20, max_rate_hz: float = 2500.0,
                 f_clk_mhz: float = 55.0, seed: int = 7,
                 power: PowerParams | str = "0.8V",
                 scheduler_capacity: int = 32768):
        if len(weights) != 4:
            raise ValueError("need one (w1, w2) pair per core")
        self.system = System(SystemConfig(
            grid_width=1, grid_height=1, f_clk_mhz=f_clk_mhz,
            scheduler_capacity=scheduler_capacity))
        for k, (w1, w2) in enumerate(weights):
            build_mnist_core(self.system.core((0, 0), k), w1, w2,
                             v_th_hidden, v_th_out)
        self.encoder = PoissonEncoder(duration_cycles, max_rate_hz, f_clk_mhz)
        self.seed = seed
        self.power = PRESETS[power] if isinstance(power, str) else power
        self._out_counts = np.zeros((4, N_CLASSES), dtype=np.int64)
        self._out_first = np.full((4, N_CLASSES), -1, dtype=np.int64)
        self._saw_output = False
        self.system.spike_hook = self._on_spike

    def _on_spike(self, t, coord, core_idx, n):
        if OUTPUT_BASE <= n < OUTPUT_BASE + N_CLASSES:
            c = n - OUTPUT_BASE
            self._out_counts[core_idx, c] += 1
            if self._out_first[core_idx, c] < 0:
                self._out_first[core_idx, c] = t
            self._saw_output = True

    def _present(self, image28, sample_seed: int) -> None:
        self.system.reset_run_state()
        self._out_counts[:] = 0
        self._out_first[:] = -1
        self._saw_output = False
        subs = interleave_subsample(image28)
        for k in range(4):
            train = self.encoder.encode(subs[k].reshape(-1),
                                        seed=sample_seed * 4 + k)
            for t, axon in train:
                self.system.inject(t, (0, 0), SpikeL0(core=k, axon=axon))

    def _energy(self) -> tuple[int, int, float]:
        stats = self.system.stats()
        bd = energy_breakdown(self.power, stats)
        return stats.wall_cycles, stats.sops, bd.total_uj

    def classify_rate(self, image28, label: int, sample_seed: int) -> MnistSample:
        self._present(image28, sample_seed)
        self.system.run_to_quiescence()
        counts = self._out_counts.sum(axis=0)
        pred, flagged = rate_readout(counts)
        cycles, sops, e_uj = self._energy()
        return MnistSample(pred, int(label), flagged, counts.tolist(),
                           cycles, sops, e_uj)

    def classify_rank(self, image28, label: int, sample_seed: int) -> MnistSample:
        """Stop at the first output spike; silence past the drain point means
        no decision."""
        self._present(image28, sample_seed)
        sys_ = self.system
        while sys_._heap and not self._saw_output:
            # advance one timestamp at a time so the decision cycle is exact
            sys_.run_until(sys_._heap[0][0])
        firsts = np.where((self._out_first >= 0).any(axis=0),
                          np.where(self._out_first >= 0, self._out_first,
                                   np.iinfo(np.int64).max).min(axis=0), -1)
        pred, flagged = rank_order_readout(firsts)
        counts = self._out_counts.sum(axis=0)
        cycles, sops, e_uj = self._energy()
        return MnistSample(pred, int(label), flagged, counts.tolist(),
                           cycles, sops, e_uj)

    def run(self, images, labels, coding: str = "rate", *,
            first_sample_seed: int = 0) -> MnistSummary:
        if coding not in ("rate", "rank"):
            raise ValueError(f"coding must be 'rate' or 'rank', got {coding!r}")
        classify = self.classify_rate if coding == "rate" else self.classify_rank
        summary = MnistSummary(coding=coding)
        for i, (img, lab) in enumerate(zip(images, labels)):
            summary.add(classify(img, int(lab), first_sample_seed + i))
        return summary


def write_results_csv(path, summary: MnistSummary) -> None:
    import csv

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "label", "pred", "correct", "flagged",
                    "wall_cycles", "sops", "energy_uj"]
                   + [f"count_{c}" for c in range(N_CLASSES)])
        for i, s in enumerate(summary.samples):
            w.writerow([i, s.label, s.pred, int(s.correct), int(s.flagged),
                        s.wall_cycles, s.sops, f"{s.energy_uj:.6f}"]
                       + list(s.counts))
