"""Shot-noise layer: Poisson counts per phase point from expected rates.

Random numbers come from numpy's Philox4x64 counter-based generator.  The run
seed feeds a ``SeedSequence`` whose spawned children give every phase point
its own independent stream, so points can be sampled in any order or in
parallel with identical results.

Poisson variates use sequential-search inversion for means below 10 (one
uniform per draw) and Hoermann's transformed rejection with squeeze (PTRS)
otherwise; ``log k!`` is evaluated with a fixed Stirling series so the
arithmetic does not depend on the platform's ``lgamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .experiment import SweepResult


@dataclass(frozen=True)
class CountRecord:
    phase: float
    duration: float
    coincidences: int
    singles_1: int
    singles_2: int


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def point_generators(seed: int, n: int) -> list[np.random.Generator]:
    """One independent Philox stream per phase point, derived from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def poisson_draw(mean: float, rng: np.random.Generator) -> int:
    return kernels.poisson_draw(mean, rng)


def sample_point(phase: float, duration: float, coincidence_rate: float, single_rate_1: float,
                 single_rate_2: float, rng: np.random.Generator) -> CountRecord:
    """Coincidences, then singles as coincidences plus independent single-only events."""
    means = np.array([
        coincidence_rate * duration,
        max(single_rate_1 - coincidence_rate, 0.0) * duration,
        max(single_rate_2 - coincidence_rate, 0.0) * duration,
    ])
    coinc, only_1, only_2 = (int(v) for v in kernels.poisson_fill(means, rng))
    return CountRecord(float(phase), float(duration), coinc, coinc + only_1, coinc + only_2)


def sample_counts(sweep: SweepResult, duration_per_point: float, seed: int) -> list[CountRecord]:
    if not duration_per_point > 0:
        raise ConfigurationError("duration per point must be > 0")
    rngs = point_generators(seed, len(sweep))
    return [
        sample_point(sweep.phases[i], duration_per_point, sweep.rates[i],
                     sweep.single_rates_1[i], sweep.single_rates_2[i], rngs[i])
        for i in range(len(sweep))
    ]


def replicate_seeds(seed: int, n: int) -> list[int]:
    """Independent 64-bit seeds for ``n`` replicate runs."""
    state = np.random.SeedSequence(int(seed)).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]
