# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics match ``_fallback`` bit for bit."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def simplex_project(const double[::1] v):
    cdef Py_ssize_t m = v.shape[0]
    # numpy's sort is already C speed; the win here is the single fused
    # scan + clip pass without intermediate arrays.
    cdef cnp.ndarray asc_arr = np.sort(v)
    cdef const double[::1] asc = asc_arr
    cdef double css = 0.0
    cdef double t = 0.0
    cdef double tau = 0.0
    cdef double uj
    cdef Py_ssize_t j
    for j in range(m):
        uj = asc[m - 1 - j]
        css += uj
        t = (css - 1.0) / (j + 1.0)
        if uj > t:
            tau = t
    cdef cnp.ndarray out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double pi
    for j in range(m):
        pi = v[j] - tau
        out[j] = pi if pi > 0.0 else 0.0
    return out_arr


def categorical_from_uniforms(const double[::1] cum, const double[::1] u):
    cdef Py_ssize_t m = cum.shape[0]
    cdef Py_ssize_t k = u.shape[0]
    cdef cnp.ndarray out_arr = np.empty(k, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i, lo, hi, mid
    cdef double ui
    for i in range(k):
        ui = u[i]
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid] > ui:
                hi = mid
            else:
                lo = mid + 1
        if lo >= m:
            lo = m - 1
        out[i] = lo
    return out_arr


def fnv1a64(data):
    cdef const unsigned char[::1] buf = bytes(data)
    cdef unsigned long long h = 0xCBF29CE484222325ULL
    cdef unsigned long long prime = 0x100000001B3ULL
    cdef Py_ssize_t i
    for i in range(buf.shape[0]):
        h ^= buf[i]
        h *= prime
    return h
