"""numba backend: scalar @njit loops over the packed memory views.

Field masks mirror the neuron word layout (see neuronword.py); the LFSR is
stepped inline (taps 0x10004, one 9-bit word per SOP when plasticity is on).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def sweep_axon_row(nm64, syn_row, start, end, sign_factor, plast_on,
                   lfsr_state, q_up, q_dn, spikes_out):
    n_spikes = 0
    s = lfsr_state
    for n in range(start, end + 1):
        lo = nm64[n, 0]
        flags = np.int64(lo >> np.uint64(57)) & 3
        enabled = flags & 1
        word_i = n >> 6
        bit = np.uint64(n & 63)
        w = np.int64(syn_row[word_i] >> bit) & 1
        v = np.int64(lo) & 0x7FF
        ca = np.int64(lo >> np.uint64(11)) & 0xF
        if plast_on:
            word9 = 0
            for k in range(9):
                out = s & 1
                s >>= 1
                if out:
                    s ^= 0x10004
                word9 |= out << k
            if enabled == 1 and flags & 2:
                t1 = np.int64(lo >> np.uint64(41)) & 0xF
                if t1 <= ca:
                    if v >= np.int64(lo >> np.uint64(30)) & 0x7FF:
                        t3 = np.int64(lo >> np.uint64(49)) & 0xF
                        if ca < t3 and word9 < q_up and w == 0:
                            syn_row[word_i] |= np.uint64(1) << bit
                    else:
                        t2 = np.int64(lo >> np.uint64(45)) & 0xF
                        if ca < t2 and word9 < q_dn and w == 1:
                            syn_row[word_i] &= ~(np.uint64(1) << bit)
        if enabled:
            # integration uses the pre-update weight
            v2 = v + sign_factor * w
            if v2 < 0:
                v2 = 0
            elif v2 > 2047:
                v2 = 2047
            v_th = np.int64(lo >> np.uint64(19)) & 0x7FF
            if v2 >= v_th:
                spikes_out[n_spikes] = n
                n_spikes += 1
                v2 = 0
                if ca < 15:
                    ca += 1
            nm64[n, 0] = (lo & ~np.uint64(0x7FFF)) \
                | np.uint64(v2) | (np.uint64(ca) << np.uint64(11))
    return n_spikes, s


@njit(cache=True)
def leak_all(nm64, leak_step):
    for n in range(nm64.shape[0]):
        lo = nm64[n, 0]
        if np.int64(lo >> np.uint64(57)) & 1 == 0:
            continue
        v = (np.int64(lo) & 0x7FF) - leak_step
        if v < 0:
            v = 0
        ca = np.int64(lo >> np.uint64(11)) & 0xF
        cnt = ((np.int64(lo >> np.uint64(15)) & 0xF) + 1) & 0xF
        period = np.int64(lo >> np.uint64(53)) & 0xF
        if cnt == period:
            if ca > 0:
                ca -= 1
            cnt = 0
        nm64[n, 0] = (lo & ~np.uint64(0x7FFFF)) | np.uint64(v) \
            | (np.uint64(ca) << np.uint64(11)) | (np.uint64(cnt) << np.uint64(15))
