# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: xoshiro256** streams, Box-Muller fills, affine
bilinear resampling and batched l1 distances.

Every function here has a twin in ``_pykernels`` with identical semantics.
"""

from libc.math cimport cos, sin, log, sqrt, floor, fabs
from libc.stdint cimport uint64_t

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _next(uint64_t* s) nogil:
    cdef uint64_t result = _rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


def xoshiro_fill_u64(uint64_t[::1] state, uint64_t[::1] out):
    cdef uint64_t s[4]
    cdef Py_ssize_t i, n = out.shape[0]
    for i in range(4):
        s[i] = state[i]
    with nogil:
        for i in range(n):
            out[i] = _next(s)
    for i in range(4):
        state[i] = s[i]


def xoshiro_fill_normal(uint64_t[::1] state, double[::1] out):
    """Standard normals by Box-Muller; an odd tail drops the sine draw."""
    cdef uint64_t s[4]
    cdef Py_ssize_t i, n = out.shape[0]
    cdef double u1, u2, r
    for i in range(4):
        s[i] = state[i]
    with nogil:
        i = 0
        while i < n:
            u1 = 1.0 - <double>(_next(s) >> 11) * INV_2_53
            u2 = <double>(_next(s) >> 11) * INV_2_53
            r = sqrt(-2.0 * log(u1))
            out[i] = r * cos(TWO_PI * u2)
            if i + 1 < n:
                out[i + 1] = r * sin(TWO_PI * u2)
            i += 2
    for i in range(4):
        state[i] = s[i]


cdef inline double _pix(const double[:, ::1] src, Py_ssize_t y, Py_ssize_t x,
                        Py_ssize_t h, Py_ssize_t w) nogil:
    if y < 0 or y >= h or x < 0 or x >= w:
        return 0.0
    return src[y, x]


def affine_bilinear(const double[:, ::1] src, double[:, ::1] out,
                    double y0, double yi, double yj,
                    double x0, double xi, double xj, bint clamp):
    """out[i, j] = bilinear(src at y0 + yi*i + yj*j, x0 + xi*i + xj*j).

    clamp=False zero-fills taps outside the grid; clamp=True replicates edges.
    """
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t oh = out.shape[0], ow = out.shape[1]
    cdef Py_ssize_t i, j, iy, ix
    cdef double y, x, fy, fx
    with nogil:
        for i in range(oh):
            for j in range(ow):
                y = y0 + yi * i + yj * j
                x = x0 + xi * i + xj * j
                if clamp:
                    if y < 0.0:
                        y = 0.0
                    elif y > h - 1:
                        y = h - 1
                    if x < 0.0:
                        x = 0.0
                    elif x > w - 1:
                        x = w - 1
                iy = <Py_ssize_t>floor(y)
                ix = <Py_ssize_t>floor(x)
                fy = y - iy
                fx = x - ix
                out[i, j] = ((1.0 - fy) * ((1.0 - fx) * _pix(src, iy, ix, h, w)
                                           + fx * _pix(src, iy, ix + 1, h, w))
                             + fy * ((1.0 - fx) * _pix(src, iy + 1, ix, h, w)
                                     + fx * _pix(src, iy + 1, ix + 1, h, w)))


def l1_rows(const double[:, ::1] refs, const double[::1] x, double scale,
            double[::1] out):
    """out[k] = sum_m |x[m] - scale * refs[k, m]|."""
    cdef Py_ssize_t k, m, n = refs.shape[0], d = refs.shape[1]
    cdef double acc
    with nogil:
        for k in range(n):
            acc = 0.0
            for m in range(d):
                acc = acc + fabs(x[m] - scale * refs[k, m])
            out[k] = acc
