"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on both backends with identical inputs; outputs are
checked for agreement before timings are reported.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fockbell import _fallback, kernels

try:
    from fockbell import _kernels as compiled
except ImportError:
    compiled = None


def _cases():
    rng = np.random.default_rng(0)
    cases = []
    for m, ni, nj in ((1, 30, 30), (400, 12, 12), (2000, 18, 3)):
        psi = rng.normal(size=(m, ni + 1, nj + 1)) + 1j * rng.normal(size=(m, ni + 1, nj + 1))
        blocks = kernels.beam_splitter_blocks(0.7, ni, nj)

        def make(impl, psi=psi, blocks=blocks):
            out = np.empty_like(psi)
            return lambda: impl.bs_apply(psi, *blocks, out) or out

        cases.append((f"bs_apply M={m} cut=({ni},{nj})", make))
    for label, mean in (("poisson_fill 10^5 x mean 3", 3.0), ("poisson_fill 10^5 x mean 400", 400.0)):
        means = np.full(100_000, mean)

        def make(impl, means=means):
            return lambda: impl.poisson_fill(means, np.random.Generator(np.random.Philox(1)))

        cases.append((label, make))
    x = rng.normal(size=2_000_000)

    def make_sum(impl, x=x):
        return lambda: impl.sum_squares(x)

    cases.append(("sum_squares 2e6", make_sum))
    return cases


_END_TO_END = (
    "import time; from fockbell.experiment import default_config, run_sweep; "
    "from fockbell.kernels import BACKEND; t = time.perf_counter(); run_sweep(default_config()); "
    "print(BACKEND, time.perf_counter() - t)"
)


def end_to_end() -> None:
    """Default numeric sweep in a fresh interpreter per backend."""
    for pure in ("0", "1"):
        env = dict(os.environ, FOCKBELL_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _END_TO_END], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"{'default numeric sweep (' + out[0] + ')':40s} {float(out[1]) * 1e3:10.1f} ms")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':40s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}  agree")
    for label, make in _cases():
        fast, slow = make(compiled), make(_fallback)
        a, b = np.asarray(fast()), np.asarray(slow())
        agree = np.array_equal(a, b) or bool(np.allclose(a, b, rtol=1e-14, atol=1e-14))
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=max(1, args.repeat // 2))) * 1e3
        print(f"{label:40s} {t_fast:10.3f} {t_slow:10.3f} {t_slow / t_fast:8.1f}  {agree}")
    end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
