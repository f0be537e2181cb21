# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: float twisted convolution and the l1-shell F scan."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs, M_PI, INFINITY

cnp.import_array()


def twisted_convolve(ka, ca, kb, cb, theta):
    cdef cnp.int64_t[:, ::1] A = np.ascontiguousarray(ka, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] B = np.ascontiguousarray(kb, dtype=np.int64)
    cdef double complex[::1] CA = np.ascontiguousarray(ca, dtype=np.complex128)
    cdef double complex[::1] CB = np.ascontiguousarray(cb, dtype=np.complex128)
    cdef double[:, ::1] T = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], n = T.shape[0]
    keys_arr = np.empty((na * nb, n), dtype=np.int64)
    coef_arr = np.empty(na * nb, dtype=np.complex128)
    cdef cnp.int64_t[:, ::1] K = keys_arr
    cdef double complex[::1] C = coef_arr
    cdef double[::1] row = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, k, l, o
    cdef double p, acc
    cdef double complex ph
    for i in range(na):
        for l in range(n):
            acc = 0.0
            for k in range(n):
                acc += A[i, k] * T[k, l]
            row[l] = acc
        for j in range(nb):
            o = i * nb + j
            p = 0.0
            for l in range(n):
                p += row[l] * B[j, l]
                K[o, l] = A[i, l] + B[j, l]
            ph = cos(M_PI * p) + 1j * sin(M_PI * p)
            C[o] = CA[i] * CB[j] * ph
    return keys_arr, coef_arr


cdef void _walk(int level, int n, int budget, int norm, double[:, ::1] T,
                double[:, ::1] acc, double tol, double[::1] out) nogil:
    # acc[level, :] holds sum_{i<level} g_i * theta[i, :]
    cdef int v, l, a
    cdef double f, s
    if level == n:
        if norm == 0:
            return
        f = 0.0
        for l in range(n):
            s = 2.0 * fabs(sin(M_PI * acc[level, l]))
            if s > f:
                f = s
        if f > tol and f < out[norm]:
            out[norm] = f
        return
    for v in range(-budget, budget + 1):
        for l in range(n):
            acc[level + 1, l] = acc[level, l] + v * T[level, l]
        a = v if v >= 0 else -v
        _walk(level + 1, n, budget - a, norm + a, T, acc, tol, out)


def shell_minima(theta, int radius, double tol):
    cdef double[:, ::1] T = np.ascontiguousarray(theta, dtype=np.float64)
    cdef int n = T.shape[0]
    out_arr = np.full(radius + 1, np.inf)
    cdef double[::1] out = out_arr
    cdef double[:, ::1] acc = np.zeros((n + 1, n), dtype=np.float64)
    with nogil:
        _walk(0, n, radius, 0, T, acc, tol, out)
    return out_arr
