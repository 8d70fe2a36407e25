"""Hot kernels with a compiled backend and a pure-Python fallback.

The Cython extension ``fockbell._kernels`` is used when it was built; setting
``FOCKBELL_PURE_PYTHON=1`` forces the numpy fallback.  ``BACKEND`` names the
active choice.  Both backends consume identical packed block matrices and the
same uniform stream, so results agree (bit-for-bit for the sampler).
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _fallback

if os.environ.get("FOCKBELL_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback


@lru_cache(maxsize=None)
def _rotation_eigenbasis(n: int):
    # generator b†a - a†b on the n-photon block, made symmetric by a diagonal phase change
    k = np.arange(n)
    off = np.sqrt((k + 1.0) * (n - k))
    if n == 0:
        return np.array([0.0]), np.ones((1, 1))
    evals, evecs = eigh_tridiagonal(np.zeros(n + 1), off)
    evals = np.rint(evals)  # spectrum is exactly {-n, -n+2, ..., n}
    evecs.setflags(write=False)
    return evals, evecs


def rotation_block(theta: float, n: int) -> np.ndarray:
    """Real (n+1)x(n+1) matrix of exp(theta (b†a - a†b)) on the states |k, n-k>, indexed by k."""
    evals, w = _rotation_eigenbasis(n)
    phase = np.exp(-1j * theta * evals)
    k = np.arange(n + 1)
    ik = 1j ** (k % 4)
    u = (w * phase) @ w.T
    u = (np.conj(ik)[:, None] * u) * ik[None, :]
    return np.ascontiguousarray(u.real)


@lru_cache(maxsize=256)
def beam_splitter_blocks(theta: float, ni: int, nj: int):
    """Packed blocks restricted to occupations inside the cutoffs ``ni`` and ``nj``.

    Returns ``(blocks, offsets, klo, khi)``; block ``n`` maps the amplitudes of
    ``|k, n-k>`` for ``klo[n] <= k <= khi[n]`` and is stored row-major (output
    index first) at ``blocks[offsets[n]:]``.
    """
    nblocks = ni + nj + 1
    klo = np.array([max(0, n - nj) for n in range(nblocks)], dtype=np.int64)
    khi = np.array([min(n, ni) for n in range(nblocks)], dtype=np.int64)
    widths = khi - klo + 1
    offsets = np.zeros(nblocks, dtype=np.int64)
    offsets[1:] = np.cumsum(widths[:-1] ** 2)
    blocks = np.empty(int(np.sum(widths ** 2)), dtype=np.float64)
    for n in range(nblocks):
        lo, hi = int(klo[n]), int(khi[n])
        sub = rotation_block(theta, n)[lo:hi + 1, lo:hi + 1]
        blocks[offsets[n]:offsets[n] + sub.size] = sub.reshape(-1)
    for arr in (blocks, offsets, klo, khi):
        arr.setflags(write=False)
    return blocks, offsets, klo, khi


def apply_rotation(psi3: np.ndarray, theta: float) -> np.ndarray:
    """Two-mode rotation on the trailing axes of ``psi3`` (shape (M, Ni+1, Nj+1)).

    Amplitude leaving the truncated square is dropped; callers measure the
    loss from the change in norm.
    """
    psi3 = np.ascontiguousarray(psi3, dtype=np.complex128)
    _, ni1, nj1 = psi3.shape
    blocks, offsets, klo, khi = beam_splitter_blocks(float(theta), ni1 - 1, nj1 - 1)
    out = np.empty_like(psi3)
    _impl.bs_apply(psi3, blocks, offsets, klo, khi, out)
    return out


def poisson_draw(mean: float, rng: np.random.Generator) -> int:
    if not mean >= 0.0 or not math.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    return int(_impl.poisson_draw(float(mean), rng))


def poisson_fill(means, rng: np.random.Generator) -> np.ndarray:
    means = np.asarray(means, dtype=np.float64)
    if np.any(~np.isfinite(means)) or np.any(means < 0):
        raise ValueError("Poisson means must be finite and >= 0")
    return _impl.poisson_fill(means, rng)


def sum_squares(values: np.ndarray) -> float:
    """Sum of ``|v|^2`` over a complex or real array, accurate to about one ulp.

    Deterministic: a fixed-order compensated sum (compiled) or an exactly
    rounded sum (fallback).
    """
    flat = np.ascontiguousarray(values).reshape(-1)
    if np.iscomplexobj(flat):
        flat = flat.view(np.float64)
    return float(_impl.sum_squares(np.ascontiguousarray(flat, dtype=np.float64)))


def loggam(x: float) -> float:
    return _impl.loggam(x)
