# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: motif enumeration and day-sign counting."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def b2_count(sigma):
    """Count apex patterns (one all-negative vertex over a positive triangle)
    among all 4-vertex subsets of a generic edge-sign matrix."""
    cdef const signed char[:, :] sig = np.ascontiguousarray(sigma, dtype=np.int8)
    cdef Py_ssize_t k = sig.shape[0]
    cdef Py_ssize_t a, b, c, d
    cdef int ab, ac, ad, bc, bd, cd, neg
    cdef long long total = 0
    if k < 4:
        return 0
    for a in range(k - 3):
        for b in range(a + 1, k - 2):
            ab = sig[a, b] < 0
            for c in range(b + 1, k - 1):
                ac = sig[a, c] < 0
                bc = sig[b, c] < 0
                for d in range(c + 1, k):
                    ad = sig[a, d] < 0
                    bd = sig[b, d] < 0
                    cd = sig[c, d] < 0
                    neg = ab + ac + ad + bc + bd + cd
                    if neg == 3:
                        # three negative edges form a star iff one vertex
                        # carries all of them
                        if (ab + ac + ad == 3 or ab + bc + bd == 3 or
                                ac + bc + cd == 3 or ad + bd + cd == 3):
                            total += 1
    return int(total)


def neg_degree_totals(signs):
    """Per-asset negative degree summed over days for an N x T sign matrix."""
    cdef const signed char[:, :] s = np.ascontiguousarray(signs, dtype=np.int8)
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t T = s.shape[1]
    out = np.zeros(n, dtype=np.int64)
    cdef long long[:] acc = out
    cdef Py_ssize_t i, t
    cdef long long n_pos
    for t in range(T):
        n_pos = 0
        for i in range(n):
            if s[i, t] > 0:
                n_pos += 1
        for i in range(n):
            if s[i, t] > 0:
                acc[i] += n - n_pos
            else:
                acc[i] += n_pos
    return out
