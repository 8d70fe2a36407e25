"""Optical elements acting on :class:`~fockbell.fock.FockState`.

Sign convention: a two-mode mixer with amplitudes ``(t, r)`` maps creation
operators as ``a1† -> t a1† + r a2†`` and ``a2† -> -r a1† + t a2†``.  The
polarizer substitutes ``a† = t c† - r d†`` and ``b† = r c† + t d†`` (the inverse
of ``c† = t a† + r b†``, ``d† = -r a† + t b†``), so a local oscillator
displaced by ``alpha`` in ``b`` reaches the detected mode ``c`` as ``r alpha``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import kernels
from .errors import ConfigurationError, TruncationError
from .fock import FockState, Mode, _sum_sq, cutoff_for_displacement, relabel_mode

MIXER_TOLERANCE = 1e-12


def _check_mixer(t: float, r: float) -> None:
    if abs(t * t + r * r - 1.0) > MIXER_TOLERANCE:
        raise ConfigurationError(f"t^2 + r^2 must equal 1 (got t={t!r}, r={r!r})")


def polarizer_amplitudes(angle: float) -> tuple[float, float]:
    """``(t, r) = (cos psi, sin psi)`` for a polarizer rotated by ``angle`` radians."""
    return math.cos(angle), math.sin(angle)


def _along_axis(state: FockState, ax: int, fn) -> np.ndarray:
    moved = np.moveaxis(state.tensor, ax, -1)
    return np.moveaxis(fn(moved), -1, ax)


def apply_beam_splitter(state: FockState, m1, m2, t: float, r: float) -> FockState:
    """Real two-mode mixer; weight pushed past a cutoff is booked as truncation loss."""
    _check_mixer(t, r)
    i, j = state.layout.axis(m1), state.layout.axis(m2)
    if i == j:
        raise ConfigurationError("beam splitter needs two distinct modes")
    if r == 0.0 and t == 1.0:
        return state.evolve(state.tensor)
    others = [ax for ax in range(len(state.layout)) if ax not in (i, j)]
    perm = others + [i, j]
    moved = np.transpose(state.tensor, perm)
    shape = moved.shape
    psi3 = moved.reshape(-1, shape[-2], shape[-1])
    out3 = kernels.apply_rotation(psi3, math.atan2(r, t))
    lost = _sum_sq(psi3) - _sum_sq(out3)
    out = np.transpose(out3.reshape(shape), np.argsort(perm))
    if state.truncation_loss + lost > state.budget:
        raise TruncationError(
            f"beam splitter on {state.modes[i]}, {state.modes[j]} lost weight {lost:.3e} "
            f"past cutoffs {state.layout.cutoffs[i]}, {state.layout.cutoffs[j]}"
        )
    return state.evolve(out, lost=lost)


def apply_polarizer(state: FockState, a, b, t: float, r: float):
    """Polarizer on the ``(a, b)`` polarization pair of one arm.

    Returns ``(state, c, d)``: the ``a`` axis becomes the transmitted mode ``c``
    (toward the detector) and ``b`` the rejected mode ``d``; both stay in the state.
    """
    _check_mixer(t, r)
    a_mode, b_mode = state.modes[state.layout.axis(a)], state.modes[state.layout.axis(b)]
    if a_mode.arm != b_mode.arm:
        raise ConfigurationError("polarizer modes must belong to the same arm")
    out = apply_beam_splitter(state, a_mode, b_mode, t, -r)
    c, d = Mode(a_mode.arm, "c"), Mode(b_mode.arm, "d")
    out = relabel_mode(relabel_mode(out, a_mode, c), b_mode, d)
    return out, c, d


def apply_phase(state: FockState, m, phi: float) -> FockState:
    """Multiply each amplitude by ``exp(i n_m phi)``."""
    ax = state.layout.axis(m)
    n = np.arange(state.layout.cutoffs[ax] + 1)
    factors = np.exp(1j * phi * n)
    return state.evolve(_along_axis(state, ax, lambda x: x * factors))


@lru_cache(maxsize=512)
def displacement_matrix(cutoff: int, beta: complex) -> np.ndarray:
    """exp(beta a† - conj(beta) a) of the generator truncated to ``cutoff`` photons."""
    n = np.arange(1, cutoff + 1)
    adag = np.diag(np.sqrt(n).astype(complex), -1)
    gen = beta * adag - np.conj(beta) * adag.conj().T
    mat = expm(gen)
    mat.setflags(write=False)
    return mat


def apply_displacement(state: FockState, m, beta: complex) -> FockState:
    """Coherent displacement of one mode.

    Refuses cutoffs below the truncation policy for ``|beta|``, and raises if
    the result puts more than the remaining budget on the top occupation.
    """
    beta = complex(beta)
    if beta == 0:
        return state.evolve(state.tensor)
    ax = state.layout.axis(m)
    cutoff = state.layout.cutoffs[ax]
    need = cutoff_for_displacement(abs(beta))
    if cutoff < need:
        raise ConfigurationError(
            f"cutoff {cutoff} on {state.modes[ax]} too small for |beta|={abs(beta):.4g} (need {need})"
        )
    mat = displacement_matrix(cutoff, beta)
    out = _along_axis(state, ax, lambda x: x @ mat.T)
    edge = _sum_sq(np.take(out, [cutoff], axis=ax))
    if state.truncation_loss + edge > state.budget:
        raise TruncationError(
            f"displacement by {beta:.4g} on {state.modes[ax]} reaches cutoff {cutoff} "
            f"with weight {edge:.3e}"
        )
    return state.evolve(out)


def coherent_amplitudes(beta: complex, cutoff: int) -> np.ndarray:
    """Analytic coherent-state amplitudes ``exp(-|b|^2/2) b^n / sqrt(n!)`` for n <= cutoff."""
    out = np.empty(cutoff + 1, dtype=complex)
    out[0] = cmath.exp(-abs(beta) ** 2 / 2)
    for n in range(1, cutoff + 1):
        out[n] = out[n - 1] * beta / math.sqrt(n)
    return out


@dataclass(frozen=True)
class ElementDescriptor:
    """Declarative optical element: ``kind`` plus its target modes and parameters."""

    kind: str
    targets: tuple
    t: float | None = None
    r: float | None = None
    phi: float | None = None
    beta: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        two = self.kind in ("beam_splitter", "polarizer")
        if self.kind not in ("beam_splitter", "polarizer", "phase_plate", "displacement"):
            raise ConfigurationError(f"unknown element kind {self.kind!r}")
        if len(self.targets) != (2 if two else 1):
            raise ConfigurationError(f"{self.kind} takes {2 if two else 1} target mode(s)")
        if two:
            if self.t is None or self.r is None:
                raise ConfigurationError(f"{self.kind} needs t and r")
            _check_mixer(self.t, self.r)
        elif self.kind == "phase_plate" and self.phi is None:
            raise ConfigurationError("phase_plate needs phi")
        elif self.kind == "displacement" and self.beta is None:
            raise ConfigurationError("displacement needs beta")

    @classmethod
    def polarizer_at(cls, a, b, angle: float) -> "ElementDescriptor":
        t, r = polarizer_amplitudes(angle)
        return cls("polarizer", (a, b), t=t, r=r)


def apply_element(state: FockState, element: ElementDescriptor) -> FockState:
    kind = element.kind
    if kind == "beam_splitter":
        return apply_beam_splitter(state, *element.targets, element.t, element.r)
    if kind == "polarizer":
        return apply_polarizer(state, *element.targets, element.t, element.r)[0]
    if kind == "phase_plate":
        return apply_phase(state, element.targets[0], element.phi)
    return apply_displacement(state, element.targets[0], element.beta)


def apply_circuit(state: FockState, elements) -> FockState:
    for element in elements:
        state = apply_element(state, element)
    return state
