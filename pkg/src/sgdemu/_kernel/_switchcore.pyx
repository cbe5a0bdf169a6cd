# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled switching core: per-sample N+P state machine.

Must stay semantically identical to _switchcore_py.run_switching — the
pure twin is the executable reference and the parity suite compares the
two bit for bit.
"""

import numpy as np

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

BACKEND = "compiled"

POLICY_FIRST = 0
POLICY_RANDOM = 1
POLICY_ROUND_ROBIN = 2

FREEZE_NETWORK = 0
FREEZE_GATEWAY = 1


cdef inline uint64_t _mix(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def run_switching(att, sst, fm, int n_active, long long w_samples,
                  int policy, seed, initial_active, int freeze_scope=0):
    """Compiled twin of _switchcore_py.run_switching; same contract."""
    arrays = [np.ascontiguousarray(a, dtype=np.float64) for a in att]
    cdef int n_gw = len(arrays)
    cdef int64_t n = arrays[0].shape[0] if n_gw else 0

    fade_arr = np.zeros(n, dtype=np.uint8)
    frozen_arr = np.zeros(n, dtype=np.uint8)
    margin_arr = np.zeros(n_gw, dtype=np.int64)
    ev_t: list = []
    ev_from: list = []
    ev_to: list = []

    if n_gw == 0 or n == 0:
        return (np.array(ev_t, dtype=np.int64), np.array(ev_from, dtype=np.int32),
                np.array(ev_to, dtype=np.int32), fade_arr, frozen_arr, margin_arr)

    sst_c = np.ascontiguousarray(sst, dtype=np.float64)
    fm_c = np.ascontiguousarray(fm, dtype=np.float64)
    init_c = np.ascontiguousarray(initial_active, dtype=np.uint8)

    cdef double[::1] sst_v = sst_c
    cdef double[::1] fm_v = fm_c
    cdef uint8_t[::1] init_v = init_c
    cdef uint8_t[::1] fade = fade_arr
    cdef uint8_t[::1] frozen = frozen_arr
    cdef int64_t[::1] margin = margin_arr

    cdef const double** ap = <const double**>PyMem_Malloc(n_gw * sizeof(double*))
    cdef int* role = <int*>PyMem_Malloc(n_gw * sizeof(int))
    cdef int* elig = <int*>PyMem_Malloc(n_gw * sizeof(int))
    cdef int64_t* frozen_g = <int64_t*>PyMem_Malloc(n_gw * sizeof(int64_t))
    if ap == NULL or role == NULL or elig == NULL or frozen_g == NULL:
        PyMem_Free(ap); PyMem_Free(role); PyMem_Free(elig); PyMem_Free(frozen_g)
        raise MemoryError()

    cdef const double[::1] col
    cdef int g, h, k, off, n_elig, chosen, swapped, switches_here, in_trans
    cdef int64_t t, frozen_until = 0
    cdef uint64_t rng = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t z
    cdef int rr = 0

    try:
        for g in range(n_gw):
            col = arrays[g]
            if col.shape[0] != n:
                raise ValueError("gateway series lengths differ")
            ap[g] = &col[0]
            role[g] = init_v[g]
            frozen_g[g] = 0

        t = 0
        while t < n:
            for g in range(n_gw):
                if role[g] == 0 and ap[g][t] < sst_v[g]:
                    margin[g] += 1
            if freeze_scope == FREEZE_NETWORK and t < frozen_until:
                frozen[t] = 1
                t += 1
                continue

            switches_here = 0
            while True:
                swapped = 0
                for g in range(n_gw):
                    if role[g] == 0 or ap[g][t] <= sst_v[g]:
                        continue
                    if freeze_scope == FREEZE_GATEWAY and frozen_g[g] > t:
                        continue
                    n_elig = 0
                    for h in range(n_gw):
                        if role[h] == 0 and ap[h][t] <= sst_v[h] and (
                                freeze_scope == FREEZE_NETWORK or frozen_g[h] <= t):
                            elig[n_elig] = h
                            n_elig += 1
                    if n_elig == 0:
                        continue
                    if policy == POLICY_FIRST:
                        chosen = elig[0]
                    elif policy == POLICY_RANDOM:
                        z = _mix(&rng)
                        chosen = elig[<int>(z % <uint64_t>n_elig)]
                    else:
                        chosen = -1
                        for off in range(n_gw):
                            k = (rr + off) % n_gw
                            for h in range(n_elig):
                                if elig[h] == k:
                                    chosen = k
                                    break
                            if chosen >= 0:
                                break
                        rr = (chosen + 1) % n_gw
                    role[g] = 0
                    role[chosen] = 1
                    ev_t.append(t)
                    ev_from.append(g)
                    ev_to.append(chosen)
                    switches_here += 1
                    swapped += 1
                    if w_samples > 0 and freeze_scope == FREEZE_GATEWAY:
                        frozen_g[g] = t + w_samples
                        frozen_g[chosen] = t + w_samples
                if w_samples > 0 or swapped == 0:
                    break

            if freeze_scope == FREEZE_NETWORK:
                if switches_here > 0 and w_samples > 0:
                    frozen_until = t + switches_here * w_samples
                    frozen[t] = 1
                else:
                    for g in range(n_gw):
                        if role[g] == 1 and ap[g][t] > fm_v[g]:
                            fade[t] = 1
                            break
            else:
                in_trans = 0
                for h in range(n_gw):
                    if frozen_g[h] > t:
                        in_trans = 1
                        break
                if in_trans:
                    frozen[t] = 1
                else:
                    for g in range(n_gw):
                        if role[g] == 1 and ap[g][t] > fm_v[g]:
                            fade[t] = 1
                            break
            t += 1
    finally:
        PyMem_Free(ap)
        PyMem_Free(role)
        PyMem_Free(elig)
        PyMem_Free(frozen_g)

    return (np.array(ev_t, dtype=np.int64), np.array(ev_from, dtype=np.int32),
            np.array(ev_to, dtype=np.int32), fade_arr, frozen_arr, margin_arr)
