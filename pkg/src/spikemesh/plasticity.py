"""Stochastic binary synaptic update rule and its per-core random engine.

A synapse bit w_b is eligible for an update whenever its destination neuron
has the plastic flag set and the core's plasticity enable is on.  The update
decision is taken on the neuron state *before* the LIF integration of the
same synaptic operation (hardware reads the word once; update and LIF logic
see the same value):

    UP    iff v_mem >= theta_m  and  theta_1 <= ca < theta_3
    DOWN  iff v_mem <  theta_m  and  theta_1 <= ca < theta_2
    NONE  otherwise (stop-learning)

The LFSR free-runs with the SOP pipeline: whenever the core's plasticity
enable is on, one 9-bit word is drawn per synaptic operation — even for
non-plastic or disabled neurons, and regardless of the decision — so the
random stream depends only on the event sequence, never on membrane
trajectories or per-neuron flags.  The flip fires when the drawn
word is strictly below the effective probability q_eff (9-bit, < 512):
q_eff = 0 never flips, 511 flips with probability 511/512 over a full LFSR
period.  UP sets the bit, DOWN clears it; a flip toward the current value is
a no-op by construction.

q_eff comes from the base probability (q_plus for UP, q_minus for DOWN)
modulated by the event's distance tag d through an 8-entry table; the table
defaults to identity (every entry = base q).
"""
from __future__ import annotations

from enum import IntEnum

from .lfsr import Lfsr17


class UpdateDecision(IntEnum):
    NONE = 0
    UP = 1
    DOWN = 2


def ssdsp_condition(v_mem: int, ca: int, theta_m: int,
                    theta_1: int, theta_2: int, theta_3: int) -> UpdateDecision:
    if v_mem >= theta_m:
        if theta_1 <= ca < theta_3:
            return UpdateDecision.UP
    else:
        if theta_1 <= ca < theta_2:
            return UpdateDecision.DOWN
    return UpdateDecision.NONE


def modulate_probability(q_base: int, d: int, table=None) -> int:
    """Effective 9-bit probability for distance tag d (identity without table)."""
    if not 0 <= d <= 7:
        raise ValueError(f"distance tag {d} outside [0, 7]")
    if table is None:
        return q_base
    return int(table[d])


def ssdsp_apply(w_b: int, decision: UpdateDecision, word9: int, q_eff: int) -> int:
    zeta = 1 if word9 < q_eff else 0
    if decision == UpdateDecision.UP:
        return w_b | zeta
    if decision == UpdateDecision.DOWN:
        return w_b & (1 - zeta)
    return w_b


class PlasticityEngine:
    """Per-core shared update engine: one LFSR + probability configuration."""

    __slots__ = ("lfsr", "q_plus", "q_minus", "distance_mod")

    def __init__(self, seed: int = 0x1ACE5, q_plus: int = 0, q_minus: int = 0,
                 distance_mod=None):
        self.lfsr = Lfsr17(seed)
        self.q_plus = q_plus
        self.q_minus = q_minus
        # None means identity: q_eff(d) replicates the base probability
        self.distance_mod = distance_mod
        for name, q in (("q_plus", q_plus), ("q_minus", q_minus)):
            if not 0 <= q < 512:
                raise ValueError(f"{name}={q} outside 9-bit range")

    def update(self, w_b: int, decision: UpdateDecision, d: int) -> int:
        """Draw one word and apply the rule (one call per eligible SOP)."""
        word9 = self.lfsr.step9()
        if decision == UpdateDecision.NONE:
            return w_b
        q_base = self.q_plus if decision == UpdateDecision.UP else self.q_minus
        q_eff = modulate_probability(q_base, d, self.distance_mod)
        return ssdsp_apply(w_b, decision, word9, q_eff)
