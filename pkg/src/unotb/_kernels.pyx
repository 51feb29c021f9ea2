# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for the discrete oracles.

Each public function mirrors the numpy version in ``_kernels_py`` and must
return the same values up to floating-point reassociation.
"""

import numpy as np

cimport cython
from cython.parallel cimport parallel, prange
from libc.stdlib cimport free, malloc
from libc.float cimport DBL_MAX
from libc.math cimport INFINITY, exp, fmax, log

# log-weights of zero-mass atoms are clamped to this finite floor by the caller
cdef double _DEAD = -1e290


cdef inline double _row_softmin(const double* c, const double* g, const double* logw,
                                double* buf, Py_ssize_t m, double inv, double eps) noexcept nogil:
    cdef Py_ssize_t j
    cdef double mx = -DBL_MAX, s = 0.0
    for j in range(m):
        buf[j] = (g[j] - c[j]) * inv + logw[j]
    for j in range(m):
        mx = fmax(mx, buf[j])
    if mx < _DEAD:
        return INFINITY
    # terms below exp(-700) cannot move the sum (the max term is 1); clamping
    # keeps every lane on the vectorized exp fast path
    for j in range(m):
        buf[j] = exp(fmax(buf[j] - mx, -700.0))
    for j in range(m):
        s += buf[j]
    return -eps * (mx + log(s))


def softmin_rows(const double[:, ::1] C, const double[::1] g, const double[::1] logw,
                 double eps, int threads=1):
    """out[i] = -eps * log sum_j exp((g[j] - C[i, j]) / eps + logw[j])."""
    cdef Py_ssize_t n = C.shape[0], m = C.shape[1], i
    cdef double inv = 1.0 / eps
    cdef double* buf
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if g.shape[0] != m or logw.shape[0] != m:
        raise ValueError("softmin_rows: length mismatch")
    if n == 0:
        return out_arr
    if m == 0:
        out_arr[:] = np.inf
        return out_arr
    with nogil, parallel(num_threads=threads):
        buf = <double*> malloc(m * sizeof(double))
        if buf == NULL:
            with gil:
                raise MemoryError()
        for i in prange(n, schedule="static"):
            out[i] = _row_softmin(&C[i, 0], &g[0], &logw[0], buf, m, inv, eps)
        free(buf)
    return out_arr


def sqdist(const double[:, ::1] X, const double[:, ::1] Y, int threads=1):
    """D[i, j] = ||X[i] - Y[j]||^2, accumulated coordinate-wise."""
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], d = X.shape[1], i, j, k
    cdef double acc, diff
    if Y.shape[1] != d:
        raise ValueError("sqdist: dimension mismatch")
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in prange(n, nogil=True, num_threads=threads, schedule="static"):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = X[i, k] - Y[j, k]
                acc = acc + diff * diff
            out[i, j] = acc
    return out_arr


def bias_relu_(double[:, ::1] out, const double[::1] b, bint relu):
    """In place: out += b (row broadcast), then max(out, 0) when ``relu``."""
    cdef Py_ssize_t n = out.shape[0], h = out.shape[1], i, j
    cdef double v
    if b.shape[0] != h:
        raise ValueError("bias_relu_: width mismatch")
    with nogil:
        for i in range(n):
            for j in range(h):
                v = out[i, j] + b[j]
                if relu and v < 0.0:
                    v = 0.0
                out[i, j] = v


cdef inline void _relu_bwd_row(const double* g, const double* o, double* gm, double* gb,
                               Py_ssize_t h, bint want_bias) noexcept nogil:
    cdef Py_ssize_t j
    cdef double v
    for j in range(h):
        v = g[j] if o[j] > 0.0 else 0.0
        gm[j] = v
        if want_bias:
            gb[j] += v


def relu_backward(g_arr, const double[:, ::1] out, bint want_bias, bint inplace=False):
    """(g * (out > 0), column sums of that product or None); ``inplace`` masks ``g`` itself."""
    cdef const double[:, ::1] g = g_arr
    cdef Py_ssize_t n = g.shape[0], h = g.shape[1], i
    if out.shape[0] != n or out.shape[1] != h:
        raise ValueError("relu_backward: shape mismatch")
    gm_arr = g_arr if inplace else np.empty((n, h), dtype=np.float64)
    gb_arr = np.zeros(h, dtype=np.float64)
    cdef double[:, ::1] gm = gm_arr
    cdef double[::1] gb = gb_arr
    if n == 0 or h == 0:
        return gm_arr, (gb_arr if want_bias else None)
    with nogil:
        for i in range(n):
            _relu_bwd_row(&g[i, 0], &out[i, 0], &gm[i, 0], &gb[0], h, want_bias)
    return gm_arr, (gb_arr if want_bias else None)
    with nogil:
        for i in range(n):
            _relu_bwd_row(&g[i, 0], &out[i, 0], &gm[i, 0], &gb[0], h, want_bias)
    return gm_arr, (gb_arr if want_bias else None)
