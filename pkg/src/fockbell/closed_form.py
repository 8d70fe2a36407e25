"""Analytic click statistics for the four-mode state behind the two polarizers.

With ``x = |r alpha|^2`` and ``Dth = theta - theta'``:

* ``D1 = D2 = exp(-x) (1 + r^2 + r^2 t^2 |alpha|^2) / 2``
* ``D12 = exp(-2x) (r^2 + 2 r^2 t^2 |alpha|^2 cos^2(Dth/2))``
* ``P_coinc = 1 - (D1 + D2 - D12)``
* ``P_false = (1 - exp(-x))^2`` (no signal photon, both clicks from the LO)
* ``P_total = eta P_coinc + (1 - eta) P_false``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, VisibilityError

#: Local-hidden-variable bound on the fringe visibility.
BELL_VISIBILITY_BOUND = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class CircuitParams:
    """Polarizer amplitudes, LO magnitude and phases, and source efficiency."""

    r: float
    t: float
    alpha_mag: float
    theta: float = 0.0
    theta_prime: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if abs(self.t * self.t + self.r * self.r - 1.0) > 1e-12:
            raise ConfigurationError(f"t^2 + r^2 must equal 1 (r={self.r}, t={self.t})")
        if not self.alpha_mag >= 0.0:
            raise ConfigurationError(f"alpha_mag must be >= 0, got {self.alpha_mag}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigurationError(f"eta must lie in [0, 1], got {self.eta}")

    @classmethod
    def from_r(cls, r: float, alpha_mag: float, delta: float = 0.0, eta: float = 1.0,
               theta: float = 0.0) -> "CircuitParams":
        """Parameters with ``t = sqrt(1 - r^2)`` and ``theta - theta' = delta``."""
        if not -1.0 <= r <= 1.0:
            raise ConfigurationError(f"|r| must not exceed 1, got {r}")
        return cls(r=r, t=math.sqrt(1.0 - r * r), alpha_mag=alpha_mag,
                   theta=theta, theta_prime=theta - delta, eta=eta)

    @property
    def delta(self) -> float:
        return self.theta - self.theta_prime

    @property
    def counter_amplitude(self) -> float:
        """``|r alpha|``, the LO amplitude reaching each detector."""
        return abs(self.r) * self.alpha_mag

    def with_delta(self, delta: float) -> "CircuitParams":
        return CircuitParams(self.r, self.t, self.alpha_mag, self.theta, self.theta - delta, self.eta)

    def replace(self, **changes) -> "CircuitParams":
        fields = dict(r=self.r, t=self.t, alpha_mag=self.alpha_mag, theta=self.theta,
                      theta_prime=self.theta_prime, eta=self.eta)
        fields.update(changes)
        return CircuitParams(**fields)


def _terms(p: CircuitParams):
    a2 = p.alpha_mag * p.alpha_mag
    r2, t2 = p.r * p.r, p.t * p.t
    return a2, r2, t2, r2 * a2


def d1_closed(p: CircuitParams) -> float:
    a2, r2, t2, x = _terms(p)
    return 0.5 * math.exp(-x) * (1.0 + r2 + r2 * t2 * a2)


def d2_closed(p: CircuitParams) -> float:
    return d1_closed(p)


def d12_closed(p: CircuitParams) -> float:
    a2, r2, t2, x = _terms(p)
    c = math.cos(0.5 * p.delta)
    return math.exp(-2.0 * x) * (r2 + 2.0 * r2 * t2 * a2 * c * c)


def p_coincidence_closed(p: CircuitParams) -> float:
    return 1.0 - (d1_closed(p) + d2_closed(p) - d12_closed(p))


def p_false_closed(p: CircuitParams) -> float:
    x = _terms(p)[3]
    return (-math.expm1(-x)) ** 2


def p_total_closed(p: CircuitParams) -> float:
    return p.eta * p_coincidence_closed(p) + (1.0 - p.eta) * p_false_closed(p)


def single_click_closed(p: CircuitParams) -> float:
    """Probability that one detector clicks, mixed over source presence with weight eta."""
    x = _terms(p)[3]
    return p.eta * (1.0 - d1_closed(p)) + (1.0 - p.eta) * (-math.expm1(-x))


def visibility(p_max: float, p_min: float) -> float:
    """Fringe contrast ``(max - min) / (max + min)``."""
    if p_max == 0.0 and p_min == 0.0:
        raise VisibilityError("visibility undefined: both extremes are zero")
    if p_min < 0.0 or p_max < p_min:
        raise ConfigurationError(f"need p_max >= p_min >= 0, got ({p_max}, {p_min})")
    return (p_max - p_min) / (p_max + p_min)


def ideal_visibility(p: CircuitParams) -> float:
    """Visibility of the coincidence fringe between ``Dth = 0`` and ``Dth = pi``."""
    return visibility(p_coincidence_closed(p.with_delta(0.0)), p_coincidence_closed(p.with_delta(math.pi)))


def total_visibility(p: CircuitParams) -> float:
    """Visibility of the eta-weighted total, including false coincidences."""
    return visibility(p_total_closed(p.with_delta(0.0)), p_total_closed(p.with_delta(math.pi)))
