"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

The PRNG loops run on Python ints masked to 64 bits, so they are slow but
bit-compatible with the compiled stream. The resampler and distance kernels
are vectorised with numpy.
"""

import math

import numpy as np

M64 = 0xFFFFFFFFFFFFFFFF
INV_2_53 = 1.0 / 9007199254740992.0


def _next(s):
    s0, s1, s2, s3 = s
    x = (s1 * 5) & M64
    result = ((((x << 7) | (x >> 57)) & M64) * 9) & M64
    t = (s1 << 17) & M64
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = ((s3 << 45) | (s3 >> 19)) & M64
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3
    return result


def xoshiro_fill_u64(state, out):
    s = [int(v) for v in state]
    for i in range(out.shape[0]):
        out[i] = _next(s)
    state[:] = np.array(s, dtype=np.uint64)


def xoshiro_fill_normal(state, out):
    s = [int(v) for v in state]
    n = out.shape[0]
    i = 0
    while i < n:
        u1 = 1.0 - (_next(s) >> 11) * INV_2_53
        u2 = (_next(s) >> 11) * INV_2_53
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        if i + 1 < n:
            out[i + 1] = r * math.sin(2.0 * math.pi * u2)
        i += 2
    state[:] = np.array(s, dtype=np.uint64)


def affine_bilinear(src, out, y0, yi, yj, x0, xi, xj, clamp):
    h, w = src.shape
    ii, jj = np.meshgrid(np.arange(out.shape[0]), np.arange(out.shape[1]), indexing="ij")
    y = y0 + yi * ii + yj * jj
    x = x0 + xi * ii + xj * jj
    if clamp:
        y = np.clip(y, 0.0, h - 1)
        x = np.clip(x, 0.0, w - 1)
    iy = np.floor(y).astype(np.intp)
    ix = np.floor(x).astype(np.intp)
    fy = y - iy
    fx = x - ix

    def tap(yy, xx):
        ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = np.zeros(yy.shape)
        vals[ok] = src[yy[ok], xx[ok]]
        return vals

    out[...] = ((1.0 - fy) * ((1.0 - fx) * tap(iy, ix) + fx * tap(iy, ix + 1))
                + fy * ((1.0 - fx) * tap(iy + 1, ix) + fx * tap(iy + 1, ix + 1)))


def l1_rows(refs, x, scale, out):
    out[...] = np.abs(x[None, :] - scale * refs).sum(axis=1)
