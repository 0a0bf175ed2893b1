# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR kernels for the hot matrix-vector path of the eigensolver."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_matvec(const cnp.int64_t[::1] indptr,
               const cnp.int64_t[::1] indices,
               const double[::1] data,
               const double[::1] x,
               double[::1] out):
    """out[i] = sum_j data[indptr[i]:indptr[i+1]] * x[indices[...]], row by row."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                acc += data[j] * x[indices[j]]
            out[i] = acc
