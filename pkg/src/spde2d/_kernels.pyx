# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot simulation loops.

Mirrors the contracts of ``spde2d._kernels_py``; see that module for the
parameter documentation.
"""
import numpy as np

BACKEND_NAME = "compiled"


def exact_ou_recurrence(decay, scale, x0, z):
    z_arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t m = z_arr.shape[0]
    cdef Py_ssize_t n = z_arr.shape[1]
    out_arr = np.empty((m, n + 1), dtype=np.float64)
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, ::1] zv = z_arr
    cdef double[:, ::1] out = out_arr
    cdef double[::1] x0v = x0_arr
    cdef Py_ssize_t j, i
    cdef double x, a, s
    cdef double[::1] dv, sv
    cdef double[:, ::1] dm, sm
    if np.ndim(decay) == 1:
        dv = np.ascontiguousarray(decay, dtype=np.float64)
        sv = np.ascontiguousarray(scale, dtype=np.float64)
        for j in range(m):
            x = x0v[j]
            out[j, 0] = x
            a = dv[j]
            s = sv[j]
            for i in range(n):
                x = a * x + s * zv[j, i]
                out[j, i + 1] = x
    else:
        dm = np.ascontiguousarray(decay, dtype=np.float64)
        sm = np.ascontiguousarray(scale, dtype=np.float64)
        for j in range(m):
            x = x0v[j]
            out[j, 0] = x
            for i in range(n):
                x = dm[j, i] * x + sm[j, i] * zv[j, i]
                out[j, i + 1] = x
    return out_arr


def sq_increment_sum(series):
    arr = np.ascontiguousarray(series, dtype=np.float64)
    flat = arr.reshape(-1, arr.shape[arr.ndim - 1])
    cdef double[:, ::1] sv = flat
    cdef Py_ssize_t p = flat.shape[0]
    cdef Py_ssize_t n1 = flat.shape[1]
    out_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, i
    cdef double acc, d
    for j in range(p):
        acc = 0.0
        for i in range(1, n1):
            d = sv[j, i] - sv[j, i - 1]
            acc += d * d
        out[j] = acc
    return out_arr.reshape(arr.shape[:-1])
