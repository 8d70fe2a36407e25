"""Threshold detectors: no-click probabilities, coincidences and the effective click POVM."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateParameterWarning
from .fock import FockState, Mode, ModeLayout, create_photon, cutoff_for_displacement, make_vacuum, prob_zero_in_modes
from .optics import apply_displacement, apply_polarizer

COINCIDENCE_SLACK = 1e-9


@dataclass(frozen=True)
class ClickProbabilities:
    """No-click probabilities of two detectors, jointly, and the coincidence probability."""

    d1: float
    d2: float
    d12: float
    p_coincidence: float

    @property
    def p_click_1(self) -> float:
        return 1.0 - self.d1

    @property
    def p_click_2(self) -> float:
        return 1.0 - self.d2


def click_statistics(state: FockState, det1_mode, det2_mode) -> ClickProbabilities:
    """Ideal threshold detectors on two modes; every other mode is traced out."""
    ax1, ax2 = state.layout.axis(det1_mode), state.layout.axis(det2_mode)
    if ax1 == ax2:
        raise ConfigurationError("detector modes must differ")
    d1 = prob_zero_in_modes(state, [det1_mode])
    d2 = prob_zero_in_modes(state, [det2_mode])
    d12 = prob_zero_in_modes(state, [det1_mode, det2_mode])
    return ClickProbabilities(d1, d2, d12, 1.0 - (d1 + d2 - d12))


def effective_projection(r: float, alpha: complex, signal_cutoff: int) -> np.ndarray:
    """Click POVM element on the signal mode of one polarizer-based detector.

    The signal mode (``a``) meets a local oscillator prepared as a coherent state
    of amplitude ``alpha`` in the orthogonal polarization (``b``); the polarizer
    transmits ``c`` with ``c† = t a† + r b†`` and the detector watches ``c``.
    Returned matrix ``E[m, n] = <m| E_click |n>`` for ``m, n <= signal_cutoff``,
    computed by brute force: ``E_click = 1 - E_noclick`` where ``E_noclick`` is
    the partial inner product over the rejected mode with ``c`` in vacuum.
    """
    if signal_cutoff < 1:
        raise ConfigurationError("signal_cutoff must be >= 1")
    if not -1.0 <= r <= 1.0:
        raise ConfigurationError(f"|r| must not exceed 1, got {r}")
    if r == 0.0:
        warnings.warn("r = 0: the detector never sees the local oscillator", DegenerateParameterWarning,
                      stacklevel=2)
    t = math.sqrt(1.0 - r * r)
    alpha = complex(alpha)
    a, b = Mode("T", "signal"), Mode("T", "lo")
    layout = ModeLayout(
        (a, b),
        (signal_cutoff + cutoff_for_displacement(abs(r * alpha)), cutoff_for_displacement(abs(alpha))),
    )
    columns = []
    fock_n = make_vacuum(layout)
    for n in range(signal_cutoff + 1):
        if n:
            fock_n = create_photon(fock_n, a)
            fock_n = fock_n.evolve(fock_n.tensor / math.sqrt(n))
        state = apply_displacement(fock_n, b, alpha)
        state, c, _ = apply_polarizer(state, a, b, t, r)
        # amplitudes with the detected mode empty, as a vector over the rejected mode
        columns.append(state.tensor[0, :])
    vac = np.array(columns)  # row n: <c=0, d| U |n, alpha>
    no_click = np.conj(vac) @ vac.T
    return np.eye(signal_cutoff + 1) - no_click


def dominant_qubit_vector(povm: np.ndarray) -> np.ndarray:
    """Dominant eigenvector of the POVM restricted to span{|0>, |1>}, phased so the |1> entry is real >= 0."""
    sub = np.asarray(povm)[:2, :2]
    sub = 0.5 * (sub + sub.conj().T)
    _, vecs = np.linalg.eigh(sub)
    v = vecs[:, -1]
    if abs(v[1]) > 0:
        v = v * (abs(v[1]) / v[1])
    elif v[0] != 0:
        v = v * (abs(v[0]) / v[0])
    return v


def target_projection_vector(r: float, alpha: complex) -> np.ndarray:
    """Normalized ket whose overlap gives the click amplitude ``r alpha c0 + c1``.

    For real ``alpha`` this is ``N (r alpha |0> + |1>)``.
    """
    v = np.array([np.conj(r * complex(alpha)), 1.0], dtype=complex)
    return v / np.linalg.norm(v)


def projection_fidelity(povm: np.ndarray, r: float, alpha: complex) -> float:
    v = dominant_qubit_vector(povm)
    return float(abs(np.vdot(target_projection_vector(r, alpha), v)) ** 2)
