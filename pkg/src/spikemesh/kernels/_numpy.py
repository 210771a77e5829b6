"""Pure-numpy backend: vectorized sweeps, bit-exact with the numba loops.

Vectorizing the LFSR relies on the precomputed serial orbit (lfsr.orbit_tables):
a sweep of width W starting at orbit position p consumes the 9-bit words at
positions p, p+9, ..., p+9(W-1) and leaves the state at position p+9W, which
is exactly what W sequential step9 calls produce.
"""
import numpy as np

from ..lfsr import PERIOD, orbit_tables

_U = np.uint64


def sweep_axon_row(nm64, syn_row, start, end, sign_factor, plast_on,
                   lfsr_state, q_up, q_dn, spikes_out):
    width = end - start + 1
    lo = nm64[start:end + 1, 0]
    flags = (lo >> _U(57)).astype(np.int64) & 3
    enabled = (flags & 1).astype(bool)
    bits = np.unpackbits(syn_row.view(np.uint8), bitorder="little")
    w = bits[start:end + 1].astype(np.int64)
    v = (lo & _U(0x7FF)).astype(np.int64)
    ca = ((lo >> _U(11)) & _U(0xF)).astype(np.int64)
    new_state = lfsr_state

    if plast_on:
        state_seq, word9_at, pos_of_state = orbit_tables()
        pos = int(pos_of_state[lfsr_state])
        idx = (pos + 9 * np.arange(width, dtype=np.int64)) % PERIOD
        words = word9_at[idx].astype(np.int64)
        new_state = int(state_seq[(pos + 9 * width) % PERIOD])
        theta_m = ((lo >> _U(30)) & _U(0x7FF)).astype(np.int64)
        t1 = ((lo >> _U(41)) & _U(0xF)).astype(np.int64)
        t2 = ((lo >> _U(45)) & _U(0xF)).astype(np.int64)
        t3 = ((lo >> _U(49)) & _U(0xF)).astype(np.int64)
        elig = enabled & (flags & 2).astype(bool) & (t1 <= ca)
        up = elig & (v >= theta_m) & (ca < t3) & (words < q_up)
        down = elig & (v < theta_m) & (ca < t2) & (words < q_dn)
        w_post = np.where(up, 1, np.where(down, 0, w))
        if not np.array_equal(w_post, w):
            bits[start:end + 1] = w_post.astype(np.uint8)
            syn_row[:] = np.packbits(bits, bitorder="little").view(np.uint64)

    # integration uses the pre-update weight
    v2 = np.clip(v + np.where(enabled, sign_factor * w, 0), 0, 2047)
    v_th = ((lo >> _U(19)) & _U(0x7FF)).astype(np.int64)
    spike = enabled & (v2 >= v_th)
    ca2 = np.where(spike, np.minimum(ca + 1, 15), ca)
    v3 = np.where(spike, 0, v2)
    keep = np.where(enabled, (lo & ~_U(0x7FFF))
                    | v3.astype(np.uint64) | (ca2.astype(np.uint64) << _U(11)), lo)
    nm64[start:end + 1, 0] = keep

    fired = np.nonzero(spike)[0].astype(np.int32) + np.int32(start)
    n_spikes = fired.shape[0]
    spikes_out[:n_spikes] = fired
    return n_spikes, new_state


def leak_all(nm64, leak_step):
    lo = nm64[:, 0]
    enabled = ((lo >> _U(57)) & _U(1)).astype(bool)
    v = np.maximum((lo & _U(0x7FF)).astype(np.int64) - leak_step, 0)
    ca = ((lo >> _U(11)) & _U(0xF)).astype(np.int64)
    cnt = (((lo >> _U(15)) & _U(0xF)).astype(np.int64) + 1) & 0xF
    period = ((lo >> _U(53)) & _U(0xF)).astype(np.int64)
    hit = cnt == period
    ca = np.where(hit, np.maximum(ca - 1, 0), ca)
    cnt = np.where(hit, 0, cnt)
    updated = (lo & ~_U(0x7FFFF)) | v.astype(np.uint64) \
        | (ca.astype(np.uint64) << _U(11)) | (cnt.astype(np.uint64) << _U(15))
    nm64[:, 0] = np.where(enabled, updated, lo)
