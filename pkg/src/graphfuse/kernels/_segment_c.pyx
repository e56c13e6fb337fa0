# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment reductions — the hot loop behind graph attention.

Semantics are identical to the numpy fallback in ``_segment_np``; the test
suite pins both backends to bit-identical outputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"


def segment_sum(values, segments, Py_ssize_t num_segments):
    """Sum rows of ``values`` (E, K) into ``num_segments`` buckets."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] v = \
        np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] s = \
        np.ascontiguousarray(segments, dtype=np.int64)
    cdef Py_ssize_t E = v.shape[0]
    cdef Py_ssize_t K = v.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = \
        np.zeros((num_segments, K), dtype=np.float64)
    cdef Py_ssize_t e, k, row
    with nogil:
        for e in range(E):
            row = s[e]
            for k in range(K):
                out[row, k] += v[e, k]
    return out


def segment_max(values, segments, Py_ssize_t num_segments):
    """Per-segment maximum of rows of ``values`` (E, K)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] v = \
        np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] s = \
        np.ascontiguousarray(segments, dtype=np.int64)
    cdef Py_ssize_t E = v.shape[0]
    cdef Py_ssize_t K = v.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = \
        np.full((num_segments, K), -np.inf, dtype=np.float64)
    cdef Py_ssize_t e, k, row
    cdef double val
    with nogil:
        for e in range(E):
            row = s[e]
            for k in range(K):
                val = v[e, k]
                if val > out[row, k]:
                    out[row, k] = val
    return out
