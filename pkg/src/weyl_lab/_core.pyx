# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Hermite and Laguerre recurrences, graded tensor assembly.

Same signatures and results as ``_pykernels``.  The dense graded assembly
is a BLAS product in both backends; the compiled loop covers the gather
regime where the dense tensor would not fit.
"""

import numpy as np
cimport numpy as cnp

from . import _pykernels
from libc.math cimport sqrt, exp, log, fabs, copysign, M_PI, INFINITY

cnp.import_array()

cdef double _BIG = 1e150
cdef double _LOG_BIG = 345.38776394910684
cdef double _LOG_H0 = 0.17328679513998632


cdef inline double _scaled(double mant, double logscale) nogil:
    cdef double e
    if mant == 0.0:
        return 0.0
    e = log(fabs(mant)) + logscale
    if e > 709.78:
        return copysign(INFINITY, mant)
    return copysign(exp(e), mant)


def hermite_table(Py_ssize_t mmax, s):
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64).ravel()
    cdef Py_ssize_t npts = sv.shape[0]
    out_arr = np.empty((mmax + 1, npts))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] sig = np.empty(npts), logscale = np.empty(npts), factor = np.empty(npts)
    cdef double[::1] prev = np.zeros(npts), cur = np.ones(npts)
    cdef Py_ssize_t i, m
    cdef double ca, cb, nxt
    cdef double root2pi = sqrt(2.0 * M_PI)
    with nogil:
        for i in range(npts):
            sig[i] = root2pi * sv[i]
            logscale[i] = _LOG_H0 - M_PI * sv[i] * sv[i]
            factor[i] = exp(logscale[i])
            out[0, i] = factor[i]
        # m outer so that every row is written contiguously
        for m in range(mmax):
            ca = sqrt(2.0 / (m + 1))
            cb = sqrt(m / (m + 1.0))
            for i in range(npts):
                nxt = ca * sig[i] * cur[i] - cb * prev[i]
                prev[i] = cur[i]
                cur[i] = nxt
                if fabs(nxt) > _BIG:
                    cur[i] = nxt / _BIG
                    prev[i] = prev[i] / _BIG
                    logscale[i] = logscale[i] + _LOG_BIG
                    factor[i] = exp(logscale[i])
                if logscale[i] > -700.0:
                    out[m + 1, i] = cur[i] * factor[i]
                else:
                    out[m + 1, i] = _scaled(cur[i], logscale[i])
    return out_arr


def laguerre_table(Py_ssize_t kmax, double a, double x, double log_prefactor=0.0):
    out_arr = np.empty(kmax + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef double logscale = log_prefactor
    cdef double prev = 0.0, cur = 1.0, nxt
    with nogil:
        out[0] = exp(logscale)
        for k in range(kmax):
            nxt = ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
            prev = cur
            cur = nxt
            if fabs(cur) > 1e300:
                cur = cur * 1e-300
                prev = prev * 1e-300
                logscale = logscale + 690.7755278982137
            out[k + 1] = _scaled(cur, logscale)
    return out_arr


def assemble_graded(factors, coeffs, index, batch=None):
    factors = np.asarray(factors, dtype=np.complex128)
    cdef Py_ssize_t N = factors.shape[0], n = factors.shape[1], D = factors.shape[2]
    if D ** (2 * n) <= 2**23:
        # the dense contraction is a single BLAS product; nothing to gain here
        return _pykernels.assemble_graded(factors, coeffs, index, batch)
    cdef double complex[:, :, :, ::1] F = np.ascontiguousarray(factors.transpose(1, 2, 3, 0))
    cdef double complex[::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef long long[:, ::1] idx = np.ascontiguousarray(index, dtype=np.int64)
    cdef Py_ssize_t B = idx.shape[0]
    out_arr = np.zeros((B, B), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, b, a
    cdef double complex acc, p
    with nogil:
        for b in range(B):
            for a in range(B):
                acc = 0.0
                for i in range(N):
                    p = c[i]
                    for j in range(n):
                        p = p * F[j, idx[b, j], idx[a, j], i]
                    acc = acc + p
                out[b, a] = acc
    return out_arr
