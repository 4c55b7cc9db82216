# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled conv1d gather/scatter kernels (padding fused into the copy)."""
import numpy as np
cimport cython

ctypedef fused real_t:
    float
    double


def out_length(Py_ssize_t length, Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    return (length + 2 * pad - k) // stride + 1


def im2col1d(real_t[:, :, ::1] x, Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t lo = (length + 2 * pad - k) // stride + 1
    dtype = np.float32 if real_t is float else np.float64
    out = np.empty((b, c * k, lo), dtype=dtype)
    cdef real_t[:, :, ::1] cols = out
    cdef Py_ssize_t bi, ci, j, l, src
    with nogil:
        for bi in range(b):
            for ci in range(c):
                for j in range(k):
                    for l in range(lo):
                        src = l * stride + j - pad
                        if 0 <= src < length:
                            cols[bi, ci * k + j, l] = x[bi, ci, src]
                        else:
                            cols[bi, ci * k + j, l] = 0
    return out


def col2im1d(real_t[:, :, ::1] cols, Py_ssize_t length, Py_ssize_t k, Py_ssize_t stride,
             Py_ssize_t pad):
    cdef Py_ssize_t b = cols.shape[0], ck = cols.shape[1], lo = cols.shape[2]
    cdef Py_ssize_t c = ck // k
    dtype = np.float32 if real_t is float else np.float64
    out = np.zeros((b, c, length), dtype=dtype)
    cdef real_t[:, :, ::1] x = out
    cdef Py_ssize_t bi, ci, j, l, dst
    # same j-outer accumulation order as the numpy backend -> identical sums
    with nogil:
        for bi in range(b):
            for ci in range(c):
                for j in range(k):
                    for l in range(lo):
                        dst = l * stride + j - pad
                        if 0 <= dst < length:
                            x[bi, ci, dst] += cols[bi, ci * k + j, l]
    return out
