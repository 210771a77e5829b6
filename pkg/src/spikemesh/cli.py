"""Command-line front end.

Subcommands
-----------
simulate      run a system described by a JSON manifest, emit stats
mnist         quad-core MNIST ensemble from a weight-fixture directory
8pattern      online-learning benchmark: train with the on-chip rule, test
power-report  energy breakdown + optimization chain from a stats file

Every output file carries a ``schema`` tag so downstream consumers can
check compatibility.  All runs are reproducible from their manifest and
seed alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from types import SimpleNamespace

from .config import ConfigError, SystemConfig
from .packets import (Config, Leak, SpikeL0, SpikeL1, SpikeL2, Teacher,
                      Virtual)
from .power import PRESETS, breakdown_from_counts, energy_breakdown, \
    whatif_optimizations
from .system import System

RUN_SCHEMA = "spikemesh-run/1"
STATS_SCHEMA = "spikemesh-stats/1"
MNIST_SCHEMA = "spikemesh-mnist/1"
PATTERN_SCHEMA = "spikemesh-8pattern/1"
POWER_SCHEMA = "spikemesh-power/1"

_PLANES = {"neuron": 0, "synapse": 1, "param": 2}


# ---------------------------------------------------------------- simulate

_RUN_KEYS = {"schema", "grid", "f_clk_mhz", "fifo_capacity",
             "scheduler_capacity", "aer_cycles_per_transaction",
             "record_spike_trace", "t_end", "program", "inject"}

_EVENT_BUILDERS = {
    "spike_l0": (SpikeL0, ("core", "axon")),
    "spike_l1": (SpikeL1, ("cores_mask", "neur")),
    "virtual": (Virtual, ("core", "neur", "value")),
    "teacher": (Teacher, ("cores_mask", "neur", "ca_value")),
    "leak": (Leak, ("cores_mask",)),
    "config": (Config, ("core", "target", "byte_addr", "data")),
}


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing key {key!r} in {where}")
    return obj[key]


def _parse_event(spec: dict, where: str):
    etype = _need(spec, "type", where)
    if etype == "spike_l2":
        dx = _need(spec, "dx", where)
        dy = _need(spec, "dy", where)
        d = spec.get("d", 1)
        return SpikeL2(dx=dx, dy=dy, cores_mask=_need(spec, "cores_mask", where),
                       syn=spec.get("syn", 0), neur=_need(spec, "neur", where),
                       d=d)
    if etype not in _EVENT_BUILDERS:
        raise ConfigError(f"unknown event type {etype!r} in {where}")
    cls, fields = _EVENT_BUILDERS[etype]
    return cls(**{f: _need(spec, f, where) for f in fields})


def load_run_manifest(path) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    schema = doc.get("schema", RUN_SCHEMA)
    if schema != RUN_SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}, "
                          f"expected {RUN_SCHEMA!r}")
    for key in doc:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    return doc


def build_system(doc: dict, *, f_clk_override: float | None = None) -> tuple:
    grid = doc.get("grid", [1, 1])
    if (not isinstance(grid, list) or len(grid) != 2
            or not all(isinstance(v, int) for v in grid)):
        raise ConfigError("key 'grid' must be [width, height]")
    cfg = SystemConfig(
        grid_width=grid[0], grid_height=grid[1],
        f_clk_mhz=f_clk_override or doc.get("f_clk_mhz", 55.0),
        fifo_capacity=doc.get("fifo_capacity", 16),
        scheduler_capacity=doc.get("scheduler_capacity", 16),
        aer_cycles_per_transaction=doc.get("aer_cycles_per_transaction", 6),
        record_spike_trace=doc.get("record_spike_trace", False),
    )
    sys_ = System(cfg)
    for i, blk in enumerate(doc.get("program", [])):
        where = f"program[{i}]"
        chip = tuple(_need(blk, "chip", where))
        core = sys_.core(chip, _need(blk, "core", where))
        plane = _need(blk, "plane", where)
        if plane not in _PLANES:
            raise ConfigError(f"unknown plane {plane!r} in {where}")
        data = bytes.fromhex(_need(blk, "bytes_hex", where))
        offset = _need(blk, "offset", where)
        for j, b in enumerate(data):
            core.mem_write_byte(_PLANES[plane], offset + j, b)
    injections = []
    for i, spec in enumerate(doc.get("inject", [])):
        where = f"inject[{i}]"
        t = _need(spec, "t", where)
        chip = tuple(_need(spec, "chip", where))
        injections.append((t, chip, _parse_event(spec, where)))
    return sys_, injections, doc.get("t_end", 0)


def _write_stats(out_dir: Path, sys_: System) -> Path:
    stats = sys_.stats()
    doc = {"schema": STATS_SCHEMA, **stats.as_dict(),
           "spike_digest": sys_.spike_digest()}
    stats_path = out_dir / "stats.json"
    with open(stats_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out_dir / "stats.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["section", "key", "metric", "value"])
        for k, v in sorted(doc.items()):
            if k in ("per_core", "per_link", "schema"):
                continue
            w.writerow(["global", "", k, v])
        for key, sub in sorted(stats.per_core.items()):
            for metric, value in sorted(sub.items()):
                w.writerow(["core", key, metric, value])
        for key, sub in sorted(stats.per_link.items()):
            for metric, value in sorted(sub.items()):
                w.writerow(["link", key, metric, value])
    return stats_path


def cmd_simulate(args) -> int:
    doc = load_run_manifest(args.config)
    sys_, injections, t_end = build_system(doc, f_clk_override=args.fclk)
    for t, chip, ev in injections:
        sys_.inject(t, chip, ev)
    if t_end:
        sys_.run_until(t_end)
    sys_.run_to_quiescence()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats_path = _write_stats(out_dir, sys_)
    s = sys_.stats()
    print(f"simulate: {s.wall_cycles} cycles, {s.sops} SOPs, "
          f"{s.spikes} spikes -> {stats_path}")
    return 0


# ------------------------------------------------------------------- mnist

def _load_fixture(weights_dir: Path):
    from .weightfile import load_weightfile

    manifest = {}
    mpath = weights_dir / "manifest.json"
    if mpath.exists():
        with open(mpath) as f:
            manifest = json.load(f)
    weights = []
    for k in range(4):
        path = weights_dir / f"core{k}.mwb"
        if not path.exists():
            raise ConfigError(f"weight fixture incomplete: missing {path}")
        layers = load_weightfile(path)
        if len(layers) != 2:
            raise ConfigError(f"{path}: expected 2 layers, got {len(layers)}")
        weights.append((layers[0].values, layers[1].values))
    return weights, manifest


def cmd_mnist(args) -> int:
    from .benchmarks.idx import load_mnist
    from .benchmarks.mnist import MnistClassifier, write_results_csv

    weights, manifest = _load_fixture(Path(args.weights))
    cal = manifest.get("calibration", {})
    v_th_hidden = args.v_th_hidden or cal.get("v_th_hidden", 48)
    v_th_out = args.v_th_out or cal.get("v_th_out", 16)
    duration = args.duration or cal.get("duration_cycles", 1 << 23)
    max_rate = args.max_rate or cal.get("max_rate_hz", 1000.0)

    data_dir = args.data or os.environ.get("SPIKEMESH_MNIST_DIR",
                                           "data/mnist")
    images, labels = load_mnist(data_dir, args.split)
    n = min(args.subset, len(images))

    clf = MnistClassifier(weights, v_th_hidden=v_th_hidden,
                          v_th_out=v_th_out, duration_cycles=duration,
                          max_rate_hz=max_rate, f_clk_mhz=args.fclk or 55.0,
                          power=args.power_preset)
    summary = clf.run(images[:n], labels[:n], coding=args.coding,
                      first_sample_seed=args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(out_dir / "results.csv", summary)
    f_mhz = args.fclk or 55.0
    agg = breakdown_from_counts(PRESETS[args.power_preset], f_mhz,
                                summary.total_cycles / (f_mhz * 1e6),
                                summary.total_sops)
    doc = {
        "schema": MNIST_SCHEMA,
        "coding": summary.coding,
        "n": summary.n,
        "accuracy": summary.accuracy,
        "n_flagged": summary.n_flagged,
        "mean_energy_uj": summary.mean_energy_uj,
        "mean_cycles": summary.total_cycles / summary.n if summary.n else 0,
        "v_th_hidden": v_th_hidden, "v_th_out": v_th_out,
        "duration_cycles": duration, "max_rate_hz": max_rate,
        "seed": args.seed, "split": args.split,
        "energy_breakdown_uj": agg.as_dict(),
    }
    with open(out_dir / "summary.json", "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    point_path = out_dir / "accuracy_energy.csv"
    new = not point_path.exists()
    with open(point_path, "a", newline="") as f:
        w = csv.writer(f)
        if new:
            w.writerow(["coding", "n", "accuracy", "mean_energy_uj"])
        w.writerow([summary.coding, summary.n, f"{summary.accuracy:.4f}",
                    f"{summary.mean_energy_uj:.3f}"])
    print(f"mnist[{summary.coding}]: {summary.n} images, "
          f"accuracy {summary.accuracy:.4f}, "
          f"{summary.mean_energy_uj:.1f} uJ/inference -> {out_dir}")
    return 0


# ---------------------------------------------------------------- 8pattern

def cmd_8pattern(args) -> int:
    from .benchmarks.patterns import PatternNetConfig, PatternNetwork

    cfg = PatternNetConfig()
    net = PatternNetwork(cfg, seed=args.seed)
    net.train()
    result = net.test(args.trials, seed=args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bits = net.fc_weight_bits()
    with open(out_dir / "weights.json", "w") as f:
        json.dump({"schema": PATTERN_SCHEMA, "rows": bits.tolist()}, f)
        f.write("\n")
    doc = {
        "schema": PATTERN_SCHEMA,
        "seed": args.seed,
        "trials_per_class": args.trials,
        "n": result.n,
        "accuracy": result.accuracy,
        "n_flagged": result.n_flagged,
        "confusion": result.confusion.tolist(),
    }
    with open(out_dir / "summary.json", "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_stats(out_dir, net.system)
    print(f"8pattern: seed {args.seed}, {result.n} trials, "
          f"accuracy {result.accuracy:.4f} -> {out_dir}")
    return 0


# ------------------------------------------------------------ power-report

def cmd_power_report(args) -> int:
    try:
        with open(args.stats) as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read stats {args.stats}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"stats {args.stats} is not valid JSON: {e}") from e
    for key in ("f_clk_mhz", "wall_time_s", "sops"):
        if key not in doc:
            raise ConfigError(f"stats file missing key {key!r}")
    stats = SimpleNamespace(
        f_clk_mhz=args.fclk or doc["f_clk_mhz"],
        wall_time_s=doc["wall_time_s"], sops=doc["sops"],
        l2_hops=doc.get("l2_hops", 0),
        l1_deliveries=doc.get("l1_deliveries", 0),
        sops_range_equiv=doc.get("sops_range_equiv", doc["sops"]))
    params = PRESETS[args.power_preset]
    base = energy_breakdown(params, stats)
    chain = whatif_optimizations(params, stats)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "schema": POWER_SCHEMA,
        "preset": params.supply,
        "breakdown_uj": base.as_dict(),
        "whatif_uj": [{"stage": name, **bd.as_dict()} for name, bd in chain],
    }
    with open(out_dir / "power.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out_dir / "power.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["stage", "e_leak_uj", "e_idle_uj", "e_sops_uj",
                    "e_hops_uj", "total_uj"])
        for name, bd in chain:
            w.writerow([name, f"{bd.e_leak_uj:.6f}", f"{bd.e_idle_uj:.6f}",
                        f"{bd.e_sops_uj:.6f}", f"{bd.e_hops_uj:.6f}",
                        f"{bd.total_uj:.6f}"])
    print(f"power-report[{params.supply}]: total {base.total_uj:.3f} uJ "
          f"-> {out_dir}")
    return 0


# -------------------------------------------------------------------- main

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spikemesh",
        description="Event-driven multi-core SNN processor simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a JSON-described system")
    sim.add_argument("--config", required=True, help="run manifest (JSON)")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--fclk", type=float, default=None,
                     help="override clock frequency (MHz)")
    sim.set_defaults(func=cmd_simulate)

    mn = sub.add_parser("mnist", help="quad-core ensemble classifier")
    mn.add_argument("--weights", required=True,
                    help="fixture directory (core{0..3}.mwb + manifest.json)")
    mn.add_argument("--coding", choices=("rate", "rank"), default="rate")
    mn.add_argument("--subset", type=int, default=100,
                    help="number of images")
    mn.add_argument("--split", choices=("train", "test"), default="test")
    mn.add_argument("--seed", type=int, default=0,
                    help="first per-sample encoder seed")
    mn.add_argument("--data", default=None,
                    help="MNIST IDX directory (default: $SPIKEMESH_MNIST_DIR "
                         "or data/mnist)")
    mn.add_argument("--out", default="out", help="output directory")
    mn.add_argument("--fclk", type=float, default=None)
    mn.add_argument("--power-preset", default="0.8V", choices=sorted(PRESETS))
    mn.add_argument("--v-th-hidden", type=int, default=None, dest="v_th_hidden")
    mn.add_argument("--v-th-out", type=int, default=None, dest="v_th_out")
    mn.add_argument("--duration", type=int, default=None,
                    help="encoding window (cycles)")
    mn.add_argument("--max-rate", type=float, default=None, dest="max_rate",
                    help="peak Poisson rate (Hz)")
    mn.set_defaults(func=cmd_mnist)

    pat = sub.add_parser("8pattern", help="online-learning benchmark")
    pat.add_argument("--seed", type=int, default=1)
    pat.add_argument("--trials", type=int, default=100,
                     help="test realizations per class")
    pat.add_argument("--out", default="out", help="output directory")
    pat.set_defaults(func=cmd_8pattern)

    pw = sub.add_parser("power-report", help="energy breakdown from stats")
    pw.add_argument("--stats", required=True, help="stats.json from a run")
    pw.add_argument("--power-preset", default="0.8V", choices=sorted(PRESETS))
    pw.add_argument("--fclk", type=float, default=None)
    pw.add_argument("--out", default="out", help="output directory")
    pw.set_defaults(func=cmd_power_report)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
