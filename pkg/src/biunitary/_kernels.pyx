# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled column step of the row-transfer contraction (see ``flatness.column_step_numpy``)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def column_step(const cnp.int64_t[::1] src, const cnp.int64_t[::1] x, const cnp.int64_t[::1] c,
                const cnp.int64_t[::1] code, const double complex[::1] amp,
                const cnp.int64_t[::1] tu, const cnp.int64_t[::1] te, const cnp.int64_t[::1] tv,
                const cnp.int64_t[::1] offsets, const cnp.int64_t[::1] ent_x2,
                const cnp.int64_t[::1] ent_b, const cnp.int64_t[::1] ent_r,
                const double complex[::1] ent_val, cnp.int64_t nv, cnp.int64_t nl, cnp.int64_t radix):
    cdef Py_ssize_t S = src.shape[0]
    cdef Py_ssize_t s, p, total = 0, o = 0
    cdef cnp.int64_t key, sr
    keys = np.empty(S, dtype=np.int64)
    cdef cnp.int64_t[::1] kv = keys
    for s in range(S):
        sr = src[s]
        key = (((tu[sr] * nv + x[s]) * nv + tv[sr]) * nl + c[s]) * nl + te[sr]
        kv[s] = key
        total += offsets[key + 1] - offsets[key]
    out_src = np.empty(total, dtype=np.int64)
    out_x = np.empty(total, dtype=np.int64)
    out_c = np.empty(total, dtype=np.int64)
    out_code = np.empty(total, dtype=np.int64)
    out_amp = np.empty(total, dtype=np.complex128)
    cdef cnp.int64_t[::1] os_ = out_src, ox = out_x, oc = out_c, ocode = out_code
    cdef double complex[::1] oa = out_amp
    for s in range(S):
        key = kv[s]
        for p in range(offsets[key], offsets[key + 1]):
            os_[o] = src[s]
            ox[o] = ent_x2[p]
            oc[o] = ent_r[p]
            ocode[o] = code[s] * radix + ent_b[p] * nv + ent_x2[p]
            oa[o] = amp[s] * ent_val[p]
            o += 1
    return out_src, out_x, out_c, out_code, out_amp
