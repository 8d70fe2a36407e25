"""Pure-Python/numpy versions of the hot kernels.

Must stay bit-compatible with ``_kernels.pyx`` for the Poisson sampler (same
uniform stream, same arithmetic) and agree to rounding for the beam splitter.
"""

import math

import numpy as np


def bs_apply(psi, blocks, offsets, klo, khi, out):
    """Apply packed photon-number blocks to ``psi`` of shape (M, Ni+1, Nj+1), writing ``out``."""
    out[...] = 0
    for n in range(klo.shape[0]):
        lo, hi = int(klo[n]), int(khi[n])
        width = hi - lo + 1
        ks = np.arange(lo, hi + 1)
        sub = blocks[offsets[n]:offsets[n] + width * width].reshape(width, width)
        out[:, ks, n - ks] = psi[:, ks, n - ks] @ sub.T


def poisson_draw(mean, rng):
    """One Poisson variate; inversion below mean 10, transformed rejection (PTRS) above."""
    if mean <= 0.0:
        return 0
    if mean < 10.0:
        return _inversion(mean, rng)
    return _ptrs(mean, rng)


def poisson_fill(means, rng):
    return np.array([poisson_draw(float(m), rng) for m in means], dtype=np.int64)


def _inversion(mean, rng):
    u = rng.random()
    p = math.exp(-mean)
    cdf = p
    k = 0
    while u > cdf and k < 1000:
        k += 1
        p *= mean / k
        cdf += p
    return k


def _ptrs(mean, rng):
    slam = math.sqrt(mean)
    loglam = math.log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -mean + k * loglam - loggam(k + 1.0)):
            return int(k)


_LOGGAM_COEFFS = (
    8.333333333333333e-02, -2.777777777777778e-03, 7.936507936507937e-04,
    -5.952380952380952e-04, 8.417508417508418e-04, -1.917526917526918e-03,
    6.410256410256410e-03, -2.955065359477124e-02, 1.796443723688307e-01,
    -1.39243221690590e+00,
)


def loggam(x):
    """log Gamma(x) for x >= 1 by a shifted Stirling series (platform-independent arithmetic)."""
    if x == 1.0 or x == 2.0:
        return 0.0
    n = int(7 - x) if x < 7.0 else 0
    x0 = x + n
    x2 = (1.0 / x0) * (1.0 / x0)
    gl0 = _LOGGAM_COEFFS[9]
    for k in range(8, -1, -1):
        gl0 *= x2
        gl0 += _LOGGAM_COEFFS[k]
    gl = gl0 / x0 + 0.5 * 1.8378770664093453 + (x0 - 0.5) * math.log(x0) - x0
    for _ in range(n):
        gl -= math.log(x0 - 1.0)
        x0 -= 1.0
    return gl


def sum_squares(x):
    """Exactly rounded sum of squares."""
    return math.fsum((x * x).tolist())
