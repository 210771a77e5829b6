"""Calibrated power and energy model.

Average power of the time-multiplexed architecture is affine in clock
frequency and SOP rate:

    P [µW] = p_leak + p_idle * f_clk[MHz] + e_sop * r_sop[MSOP/s]

Per-inference energy splits into leakage, idle-clock, and SOP terms
(hop energies are additive on top; the model excludes IO power):

    E_leak = p_leak * T          E_idle = p_idle * f_clk * T
    E_sops = e_sop * N_SOP       E_hops = e_l2 * hops_l2 + e_l1 * hops_l1

Two measured supply presets ship: 0.8 V (low-power) and 1.2 V (high-speed).

The what-if estimator is analytical — it rescales a measured breakdown, it
never re-simulates:

  1. crossbar ranges   SOP count *and* wall time shrink by the ratio of
                       range-restricted to full sweeps (rho), scaling
                       E_sops, E_idle, and E_leak by rho
  2. symmetric weights binary weights read as -1/+1 instead of 0/1 remove
                       the inhibitory-compensation activity: SOP count and
                       time divide by 1.5
  3. clock gating      parameter banks and update registers gated when
                       idle: E_idle * 0.45
"""
from __future__ import annotations

from dataclasses import dataclass

_PJ_TO_UJ = 1e-6


@dataclass(frozen=True)
class PowerParams:
    """Measured constants at one supply point."""
    p_leak_uw: float          # static leakage, µW
    p_idle_uw_per_mhz: float  # idle dynamic power slope, µW/MHz
    e_sop_pj: float           # incremental energy per SOP, pJ
    e_hop_l2_pj: float        # energy per L2 mesh hop, pJ
    e_hop_l1_pj: float        # energy per L1 star hop, pJ
    supply: str = ""

    def __post_init__(self):
        for name in ("p_leak_uw", "p_idle_uw_per_mhz", "e_sop_pj",
                     "e_hop_l2_pj", "e_hop_l1_pj"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


PRESET_0V8 = PowerParams(45.0, 41.3, 30.0, 9.0, 1.7, supply="0.8V")
PRESET_1V2 = PowerParams(190.0, 94.0, 65.0, 20.3, 3.8, supply="1.2V")

PRESETS = {
    "0.8V": PRESET_0V8,
    "0.8": PRESET_0V8,
    "1.2V": PRESET_1V2,
    "1.2": PRESET_1V2,
}


def average_power_uw(params: PowerParams, f_clk_mhz: float,
                     r_sop_msops: float) -> float:
    """Average power in µW at a clock frequency and sustained SOP rate."""
    return (params.p_leak_uw
            + params.p_idle_uw_per_mhz * f_clk_mhz
            + params.e_sop_pj * r_sop_msops)


@dataclass
class EnergyBreakdown:
    e_leak_uj: float
    e_idle_uj: float
    e_sops_uj: float
    e_hops_uj: float = 0.0

    @property
    def total_uj(self) -> float:
        return self.e_leak_uj + self.e_idle_uj + self.e_sops_uj \
            + self.e_hops_uj

    def as_dict(self) -> dict:
        return dict(e_leak_uj=self.e_leak_uj, e_idle_uj=self.e_idle_uj,
                    e_sops_uj=self.e_sops_uj, e_hops_uj=self.e_hops_uj,
                    total_uj=self.total_uj)


def breakdown_from_counts(params: PowerParams, f_clk_mhz: float,
                          wall_time_s: float, n_sop: int,
                          l2_hops: int = 0, l1_hops: int = 0
                          ) -> EnergyBreakdown:
    return EnergyBreakdown(
        e_leak_uj=params.p_leak_uw * wall_time_s,
        e_idle_uj=params.p_idle_uw_per_mhz * f_clk_mhz * wall_time_s,
        e_sops_uj=params.e_sop_pj * n_sop * _PJ_TO_UJ,
        e_hops_uj=(params.e_hop_l2_pj * l2_hops
                   + params.e_hop_l1_pj * l1_hops) * _PJ_TO_UJ,
    )


def energy_breakdown(params: PowerParams, stats,
                     wall_time_s: float | None = None) -> EnergyBreakdown:
    """Breakdown for one simulation (or one inference window of it).

    `stats` is any object with f_clk_mhz, wall_time_s, sops, l2_hops, and
    l1_deliveries attributes; an explicit wall_time_s overrides the stats
    clock (useful when the window of interest is shorter than the run).
    """
    t = stats.wall_time_s if wall_time_s is None else wall_time_s
    return breakdown_from_counts(
        params, stats.f_clk_mhz, t, stats.sops,
        l2_hops=getattr(stats, "l2_hops", 0),
        l1_hops=getattr(stats, "l1_deliveries", 0))


def whatif_optimizations(params: PowerParams, stats,
                         wall_time_s: float | None = None,
                         rho_range: float | None = None
                         ) -> list[tuple[str, EnergyBreakdown]]:
    """Cumulative optimization chain starting from the measured breakdown.

    rho_range defaults to sops_range_equiv / sops from the stats counters —
    the fraction of crossbar traversals that range-restricted sweeps would
    have kept.  Hop energy is left untouched (the fabric is unaffected).
    """
    base = energy_breakdown(params, stats, wall_time_s)
    if rho_range is None:
        rho_range = stats.sops_range_equiv / stats.sops if stats.sops else 1.0
    if not 0.0 <= rho_range <= 1.0:
        raise ValueError(f"rho_range={rho_range} outside [0, 1]")
    ranged = EnergyBreakdown(base.e_leak_uj * rho_range,
                             base.e_idle_uj * rho_range,
                             base.e_sops_uj * rho_range,
                             base.e_hops_uj)
    sym = EnergyBreakdown(ranged.e_leak_uj / 1.5, ranged.e_idle_uj / 1.5,
                          ranged.e_sops_uj / 1.5, ranged.e_hops_uj)
    gated = EnergyBreakdown(sym.e_leak_uj, sym.e_idle_uj * 0.45,
                            sym.e_sops_uj, sym.e_hops_uj)
    return [("baseline", base), ("crossbar_ranges", ranged),
            ("symmetric_weights", sym), ("clock_gating", gated)]
