# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: recursive filter, peak scan, activation and loss passes.

Same contracts as adlsense._kernels_py; selected in adlsense.backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def lowpass(double[::1] x, double alpha):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double acc
    cdef double beta = 1.0 - alpha
    out_arr = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_arr
    cdef double[::1] out = out_arr
    acc = x[0]
    out[0] = acc
    for i in range(1, n):
        acc = alpha * x[i] + beta * acc
        out[i] = acc
    return out_arr


def peak_indices(double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, m = 0
    if n < 3:
        return np.empty(0, dtype=np.intp)
    # strict maxima cannot be adjacent, so (n - 1) // 2 bounds the count
    buf_arr = np.empty((n - 1) // 2, dtype=np.intp)
    cdef Py_ssize_t[::1] buf = buf_arr
    for i in range(1, n - 1):
        if x[i] > x[i - 1] and x[i] > x[i + 1]:
            buf[m] = i
            m += 1
    return buf_arr[:m].copy()


def sigmoid(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], k = z.shape[1]
    cdef Py_ssize_t i, j
    cdef double v, e
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(k):
            v = z[i, j]
            if v >= 0.0:
                out[i, j] = 1.0 / (1.0 + exp(-v))
            else:
                e = exp(v)
                out[i, j] = e / (1.0 + e)
    return out_arr


def sigmoid_backward(double[:, ::1] a, double[:, ::1] upstream):
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double s
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(k):
            s = a[i, j]
            out[i, j] = upstream[i, j] * s * (1.0 - s)
    return out_arr


def softmax(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], k = z.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, s
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        mx = z[i, 0]
        for j in range(1, k):
            if z[i, j] > mx:
                mx = z[i, j]
        s = 0.0
        for j in range(k):
            out[i, j] = exp(z[i, j] - mx)
            s += out[i, j]
        for j in range(k):
            out[i, j] /= s
    return out_arr


def softmax_xent(double[:, ::1] logits, Py_ssize_t[::1] labels):
    cdef Py_ssize_t n = logits.shape[0], k = logits.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, s, total = 0.0
    cdef double inv_n = 1.0 / n
    delta_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] delta = delta_arr
    for i in range(n):
        mx = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > mx:
                mx = logits[i, j]
        s = 0.0
        for j in range(k):
            delta[i, j] = exp(logits[i, j] - mx)
            s += delta[i, j]
        for j in range(k):
            delta[i, j] /= s
        total += -log(delta[i, labels[i]])
        delta[i, labels[i]] -= 1.0
        for j in range(k):
            delta[i, j] *= inv_n
    return total * inv_n, delta_arr
