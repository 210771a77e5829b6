"""Hot simulation kernels with two interchangeable backends.

The sweep and leak kernels dominate runtime (one crossbar sweep touches 512
destination neurons).  Two bit-exact implementations ship:

  * ``numba``  — @njit scalar loops, the default when numba imports
  * ``numpy``  — vectorized fallback using precomputed LFSR orbit tables

Select explicitly with the environment variable ``SPIKEMESH_BACKEND`` set to
``numba`` or ``numpy``; unset prefers numba and silently falls back.  Both
expose the same functions and produce byte-identical memory images, spike
lists, and LFSR states (enforced by the backend-equivalence test suite).

Kernel contract (shared by both backends):

  sweep_axon_row(nm64, syn_row, start, end, sign_factor, plast_on,
                 lfsr_state, q_up, q_dn, spikes_out) -> (n_spikes, new_state)
      nm64      (512, 2) uint64 view of the neuron memory, mutated in place
      syn_row   (8,) uint64 view of one 512-bit synapse row, mutated in place
      start/end inclusive destination sweep bounds
      sign_factor  signed axon contribution (+-1, +-2, +-4, +-8)
      plast_on  core plasticity enable; when set the engine draws one 9-bit
                word per SOP (the generator free-runs with the SOP pipeline),
                applying it only where the neuron is enabled and plastic
      q_up/q_dn distance-modulated effective probabilities for this event
      spikes_out int32 scratch (>= 512), filled with spiking neuron indices

  leak_all(nm64, leak_step) -> None
      One leak event: every enabled neuron loses leak_step (floor 0) and its
      Calcium counter advances with 4-bit wraparound; when the counter lands
      on ca_leak_period the Calcium decrements (floor 0) and the counter
      clears.  A period of 0 therefore behaves as 16.

The LIF integration uses the synapse bit read *before* any plasticity flip
(hardware reads the word once; update and integration see the same value),
and the update decision samples the membrane/Calcium state *before* the
integration of the same SOP.
"""
import os

_requested = os.environ.get("SPIKEMESH_BACKEND", "").lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"SPIKEMESH_BACKEND={_requested!r}: must be 'numba' or 'numpy'"
    )

HAS_NUMBA = False
if _requested != "numpy":
    try:
        from ._numba import leak_all, sweep_axon_row
        HAS_NUMBA = True
        ACTIVE_BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
if not HAS_NUMBA:
    from ._numpy import leak_all, sweep_axon_row
    ACTIVE_BACKEND = "numpy"

__all__ = ["sweep_axon_row", "leak_all", "ACTIVE_BACKEND", "HAS_NUMBA"]
