"""Fringe fitting, visibility with uncertainty, background subtraction and the Bell verdict.

The fringe model ``rate = A + B cos^2((phi - phi0)/2)`` is linear in
``(1, cos phi, sin phi)`` once written as ``c0 + c1 cos phi + c2 sin phi``
with ``c0 = A + B/2`` and ``(c1, c2) = (B/2)(cos phi0, sin phi0)``.  It is
solved by weighted least squares; parameter errors come from the
coefficient covariance ``(X^T W X)^-1`` through the delta method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .closed_form import BELL_VISIBILITY_BOUND
from .errors import FitError, OverSubtractionError


class Verdict(str, enum.Enum):
    VIOLATES = "violates"
    CONSISTENT_WITH_LHV = "consistent_with_lhv"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class FringeFit:
    """Fitted fringe; ``offset`` is the floor ``A`` after any subtracted background."""

    offset: float
    amplitude: float
    phase_zero: float
    visibility: float
    visibility_err: float
    chi2_per_dof: float
    offset_err: float
    amplitude_err: float
    phase_zero_err: float
    coef: np.ndarray
    coef_cov: np.ndarray
    background: float = 0.0
    background_var: float = 0.0
    n_points: int = 0

    @property
    def max_rate(self) -> float:
        return self.offset + self.amplitude

    @property
    def min_rate(self) -> float:
        return self.offset

    def model(self, phases) -> np.ndarray:
        phases = np.asarray(phases, dtype=float)
        return self.offset + self.amplitude * np.cos(0.5 * (phases - self.phase_zero)) ** 2


def _wrap(angle: float) -> float:
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def _build(coef, cov, chi2_per_dof, n_points, background=0.0, background_var=0.0) -> FringeFit:
    c0, c1, c2 = (float(v) for v in coef)
    radius = math.hypot(c1, c2)
    amplitude = 2.0 * radius
    offset = (c0 - radius) - background
    level = c0 - background
    cov = np.array(cov, dtype=float)
    full = cov.copy()
    full[0, 0] += background_var
    if radius > 0.0:
        u = np.array([0.0, c1 / radius, c2 / radius])
        j_offset = np.array([1.0, 0.0, 0.0]) - u
        j_amp = 2.0 * u
        j_phase = np.array([0.0, -c2, c1]) / radius ** 2
        j_vis = np.array([-radius / level ** 2, c1 / (radius * level), c2 / (radius * level)])
        vis_err = math.sqrt(max(j_vis @ full @ j_vis, 0.0))
        phase_err = math.sqrt(max(j_phase @ full @ j_phase, 0.0))
        amp_err = math.sqrt(max(j_amp @ full @ j_amp, 0.0))
        off_err = math.sqrt(max(j_offset @ full @ j_offset, 0.0))
    else:
        # no fringe: quote the noise floor of the oscillating coefficients
        floor = math.sqrt(max(np.linalg.eigvalsh(full[1:, 1:]).max(), 0.0))
        vis_err = floor / level if level > 0 else math.inf
        amp_err = 2.0 * floor
        off_err = math.sqrt(full[0, 0]) + floor
        phase_err = math.pi
    denom = amplitude + 2.0 * offset
    vis = amplitude / denom if denom != 0.0 else 0.0
    return FringeFit(
        offset=offset,
        amplitude=amplitude,
        phase_zero=_wrap(math.atan2(c2, c1)) if radius > 0.0 else 0.0,
        visibility=vis,
        visibility_err=vis_err,
        chi2_per_dof=chi2_per_dof,
        offset_err=off_err,
        amplitude_err=amp_err,
        phase_zero_err=phase_err,
        coef=np.array([c0, c1, c2]),
        coef_cov=cov,
        background=background,
        background_var=background_var,
        n_points=n_points,
    )


def fit_fringe_rates(phases, rates, sigmas=None) -> FringeFit:
    """Weighted least-squares fringe fit of rates with standard deviations ``sigmas``.

    Without ``sigmas`` all points get unit weight and the covariance is scaled
    by the residual variance.
    """
    phases = np.asarray(phases, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if phases.shape != rates.shape or phases.ndim != 1:
        raise FitError("phases and rates must be 1-D arrays of equal length")
    distinct = np.unique(np.round(np.mod(phases, 2.0 * math.pi), 12))
    if distinct.size < 4:
        raise FitError(f"need at least 4 distinct phases, got {distinct.size}")
    if np.ptp(phases) < math.pi - 1e-12:
        raise FitError("phases must span at least half a period")
    weighted = sigmas is not None
    sig = np.ones_like(rates) if not weighted else np.asarray(sigmas, dtype=float)
    if np.any(sig <= 0):
        raise FitError("standard deviations must be positive")
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    a = design / sig[:, None]
    b = rates / sig
    coef, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        raise FitError("degenerate phase design")
    resid = b - a @ coef
    chi2 = float(resid @ resid)
    dof = phases.size - 3
    chi2_per_dof = chi2 / dof if dof > 0 else math.nan
    cov = np.linalg.inv(a.T @ a)
    if not weighted and dof > 0:
        cov = cov * chi2_per_dof
    return _build(coef, cov, chi2_per_dof, phases.size)


def fit_fringe(records) -> FringeFit:
    """Fit coincidence counts; Poisson variance ``max(count, 1)`` per point."""
    records = list(records)
    if not records:
        raise FitError("no records to fit")
    phases = np.array([r.phase for r in records], dtype=float)
    durations = np.array([r.duration for r in records], dtype=float)
    counts = np.array([r.coincidences for r in records], dtype=float)
    rates = counts / durations
    sigmas = np.sqrt(np.maximum(counts, 1.0)) / durations
    return fit_fringe_rates(phases, rates, sigmas)


def subtract_background(fit: FringeFit, flat_background_rate: float, rate_err: float = 0.0) -> FringeFit:
    """Remove a flat background from the floor and recompute the visibility.

    ``rate_err`` is the background's standard deviation, added in quadrature
    (default: known exactly).
    """
    if flat_background_rate < 0:
        raise OverSubtractionError("background rate must be >= 0")
    if flat_background_rate > fit.offset:
        raise OverSubtractionError(
            f"background {flat_background_rate:.6g} exceeds fitted floor {fit.offset:.6g}"
        )
    if flat_background_rate == 0 and rate_err == 0:
        return fit
    return _build(fit.coef, fit.coef_cov, fit.chi2_per_dof, fit.n_points,
                  background=fit.background + flat_background_rate,
                  background_var=fit.background_var + rate_err ** 2)


def bell_verdict(fit: FringeFit, k: float = 2.0) -> Verdict:
    """Compare ``visibility +- k sigma`` with the 1/sqrt(2) local-realism bound."""
    return verdict_for(fit.visibility, fit.visibility_err, k)


def verdict_for(visibility: float, error: float, k: float = 2.0) -> Verdict:
    if visibility - k * error > BELL_VISIBILITY_BOUND:
        return Verdict.VIOLATES
    if visibility + k * error < BELL_VISIBILITY_BOUND:
        return Verdict.CONSISTENT_WITH_LHV
    return Verdict.INCONCLUSIVE


def expected_visibility(sweep) -> float:
    """Visibility of the noiseless expected-rate curve of a sweep."""
    return fit_fringe_rates(sweep.phases, sweep.rates).visibility
