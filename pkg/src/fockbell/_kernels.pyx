# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_fallback.py`` for the reference."""

from libc.math cimport exp, log, sqrt, floor, fabs
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

import numpy as np


def bs_apply(const double complex[:, :, ::1] psi, const double[::1] blocks,
             const long long[::1] offsets, const long long[::1] klo,
             const long long[::1] khi, double complex[:, :, ::1] out):
    cdef Py_ssize_t M = psi.shape[0]
    cdef Py_ssize_t nblocks = klo.shape[0]
    cdef Py_ssize_t m, n, p, k, lo, hi, width
    cdef long long base
    cdef double complex acc
    with nogil:
        out[:, :, :] = 0
        for m in range(M):
            for n in range(nblocks):
                lo = klo[n]
                hi = khi[n]
                width = hi - lo + 1
                base = offsets[n]
                for p in range(width):
                    acc = 0
                    for k in range(width):
                        acc = acc + blocks[base + p * width + k] * psi[m, lo + k, n - lo - k]
                    out[m, lo + p, n - lo - p] = acc


cdef double[10] _LG = [
    8.333333333333333e-02, -2.777777777777778e-03, 7.936507936507937e-04,
    -5.952380952380952e-04, 8.417508417508418e-04, -1.917526917526918e-03,
    6.410256410256410e-03, -2.955065359477124e-02, 1.796443723688307e-01,
    -1.39243221690590e+00]


cdef double _loggam(double x) noexcept nogil:
    cdef long n = 0
    cdef long k
    cdef double x0, x2, gl0, gl
    if x == 1.0 or x == 2.0:
        return 0.0
    if x < 7.0:
        n = <long>(7 - x)
    x0 = x + n
    x2 = (1.0 / x0) * (1.0 / x0)
    gl0 = _LG[9]
    for k in range(8, -1, -1):
        gl0 *= x2
        gl0 += _LG[k]
    gl = gl0 / x0 + 0.5 * 1.8378770664093453 + (x0 - 0.5) * log(x0) - x0
    for k in range(n):
        gl -= log(x0 - 1.0)
        x0 -= 1.0
    return gl


def loggam(double x):
    return _loggam(x)


cdef inline double _next(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef long _inversion(double mean, bitgen_t *bg) noexcept nogil:
    cdef double u = _next(bg)
    cdef double p = exp(-mean)
    cdef double cdf = p
    cdef long k = 0
    while u > cdf and k < 1000:
        k += 1
        p *= mean / k
        cdf += p
    return k


cdef long _ptrs(double mean, bitgen_t *bg) noexcept nogil:
    cdef double slam = sqrt(mean)
    cdef double loglam = log(mean)
    cdef double b = 0.931 + 2.53 * slam
    cdef double a = -0.059 + 0.02483 * b
    cdef double invalpha = 1.1239 + 1.1328 / (b - 3.4)
    cdef double vr = 0.9277 - 3.6224 / (b - 2.0)
    cdef double u, v, us
    cdef long k
    while True:
        u = _next(bg) - 0.5
        v = _next(bg)
        us = 0.5 - fabs(u)
        k = <long>floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (log(v) + log(invalpha) - log(a / (us * us) + b)
                <= -mean + k * loglam - _loggam(k + 1.0)):
            return k


cdef inline long _draw(double mean, bitgen_t *bg) noexcept nogil:
    if mean <= 0.0:
        return 0
    if mean < 10.0:
        return _inversion(mean, bg)
    return _ptrs(mean, bg)


cdef bitgen_t *_bitgen(rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t *>PyCapsule_GetPointer(capsule, "BitGenerator")


def poisson_draw(double mean, rng):
    cdef bitgen_t *bg = _bitgen(rng)
    with rng.bit_generator.lock:
        return _draw(mean, bg)


def poisson_fill(means, rng):
    cdef const double[::1] mv = np.ascontiguousarray(means, dtype=np.float64)
    out = np.empty(mv.shape[0], dtype=np.int64)
    cdef long long[::1] ov = out
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t i
    with rng.bit_generator.lock:
        for i in range(mv.shape[0]):
            ov[i] = _draw(mv[i], bg)
    return out


def sum_squares(const double[::1] x):
    """Neumaier-compensated sum of squares in fixed index order."""
    cdef Py_ssize_t i
    cdef double s = 0.0, c = 0.0, v, t
    with nogil:
        for i in range(x.shape[0]):
            v = x[i] * x[i]
            t = s + v
            if fabs(s) >= fabs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
    return s + c
