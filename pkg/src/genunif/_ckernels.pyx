# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling/counting kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

BACKEND = "cython"


def build_alias(p):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t k = pv.shape[0]
    prob_arr = np.zeros(k, dtype=np.float64)
    alias_arr = np.zeros(k, dtype=np.int64)
    scaled_arr = np.empty(k, dtype=np.float64)
    small_arr = np.empty(k, dtype=np.int64)
    large_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] prob = prob_arr
    cdef int64_t[::1] alias = alias_arr
    cdef double[::1] scaled = scaled_arr
    cdef int64_t[::1] small = small_arr
    cdef int64_t[::1] large = large_arr
    cdef Py_ssize_t ns = 0, nl = 0, i
    cdef int64_t lo, hi
    for i in range(k):
        scaled[i] = pv[i] * k
    for i in range(k):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        lo = small[ns]
        nl -= 1
        hi = large[nl]
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small[ns] = hi
            ns += 1
        else:
            large[nl] = hi
            nl += 1
    for i in range(nl):
        prob[large[i]] = 1.0
        alias[large[i]] = large[i]
    for i in range(ns):
        prob[small[i]] = 1.0
        alias[small[i]] = small[i]
    return prob_arr, alias_arr


def alias_lookup(prob, alias, u):
    cdef double[::1] pr = np.ascontiguousarray(prob, dtype=np.float64)
    cdef int64_t[::1] al = np.ascontiguousarray(alias, dtype=np.int64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], j
    cdef int64_t k = pr.shape[0], i
    cdef double x
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    for j in range(n):
        x = uv[j] * k
        i = <int64_t>x
        if i > k - 1:
            i = k - 1
        if x - i < pr[i]:
            out[j] = i
        else:
            out[j] = al[i]
    return out_arr


def scan_first_collision(ids, int64_t[::1] counts, int r):
    cdef int64_t[::1] iv = np.ascontiguousarray(ids, dtype=np.int64)
    cdef Py_ssize_t n = iv.shape[0], j
    cdef int64_t c
    for j in range(n):
        counts[iv[j]] += 1
        if counts[iv[j]] >= r:
            return j + 1
    return -1


def falling_factorial_sum(counts, int r):
    cdef int64_t[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t n = cv.shape[0], i
    cdef int j
    cdef double acc = 0.0, term, c
    for i in range(n):
        c = <double>cv[i]
        term = c
        for j in range(1, r):
            term *= c - j
        acc += term
    return acc


def segment_falling_factorials(ids, lengths, int64_t n_ids, rs):
    cdef int64_t[::1] iv = np.ascontiguousarray(ids, dtype=np.int64)
    cdef int64_t[::1] lv = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef int64_t[::1] rv = np.ascontiguousarray(rs, dtype=np.int64)
    cdef Py_ssize_t n_seg = lv.shape[0], n_r = rv.shape[0]
    out_arr = np.zeros((n_seg, n_r), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    count_arr = np.zeros(n_ids, dtype=np.int64)
    touched_arr = np.empty(max(1, iv.shape[0]), dtype=np.int64)
    cdef int64_t[::1] cnt = count_arr
    cdef int64_t[::1] touched = touched_arr
    cdef Py_ssize_t s, pos = 0, j, nt, t, q
    cdef int64_t idv, r
    cdef double c, term
    for s in range(n_seg):
        nt = 0
        for j in range(pos, pos + lv[s]):
            idv = iv[j]
            if cnt[idv] == 0:
                touched[nt] = idv
                nt += 1
            cnt[idv] += 1
        pos += lv[s]
        for t in range(nt):
            c = <double>cnt[touched[t]]
            for q in range(n_r):
                r = rv[q]
                term = c
                for j in range(1, r):
                    term *= c - j
                out[s, q] += term
            cnt[touched[t]] = 0
    return out_arr
