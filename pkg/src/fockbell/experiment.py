"""Phase sweeps of the full setup, single-photon and classical-light control.

Numeric engine layout: the input stage holds ``input.signal`` (heralded photon
or classical field) and ``input.lo`` (local oscillator with amplitude
``sqrt(2) alpha``).  The 50/50 beam splitter sends each into the ``T`` and
``R`` arms, giving modes ``T.signal, T.lo, R.signal, R.lo``.  A phase plate on
``R.lo`` sets ``theta' = theta - delta``; a polarizer per arm then maps
``(signal, lo) -> (c, d)`` and the detectors watch ``T.c`` and ``R.c``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .closed_form import (
    CircuitParams,
    d1_closed,
    p_coincidence_closed,
    p_false_closed,
    single_click_closed,
)
from .detection import ClickProbabilities, click_statistics
from .errors import ConfigurationError
from .fock import (
    FockState,
    Mode,
    ModeLayout,
    add_vacuum_mode,
    create_photon,
    cutoff_for_displacement,
    make_vacuum,
    relabel_mode,
    set_cutoff,
)
from .optics import apply_beam_splitter, apply_displacement, apply_phase, apply_polarizer

SQRT_HALF = math.sqrt(0.5)

IN_SIGNAL, IN_LO = Mode("input", "signal"), Mode("input", "lo")
T_SIGNAL, T_LO = Mode("T", "signal"), Mode("T", "lo")
R_SIGNAL, R_LO = Mode("R", "signal"), Mode("R", "lo")
DETECTOR_1, DETECTOR_2 = Mode("T", "c"), Mode("R", "c")

#: Signal-phase samples used to average over the random phase of classical light.
CLASSICAL_PHASE_SAMPLES = 32

#: Four-mode tensors with more amplitudes than this are evaluated arm by arm.
DENSE_AMPLITUDE_LIMIT = 4_000_000


@dataclass(frozen=True)
class PhaseGrid:
    """Evenly spaced sweep of the LO phase difference, endpoints included (radians)."""

    start: float
    end: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ConfigurationError("a sweep needs at least 2 steps")
        if not self.end > self.start:
            raise ConfigurationError("sweep span must be positive")

    @classmethod
    def degrees(cls, start: float, end: float, steps: int) -> "PhaseGrid":
        return cls(math.radians(start), math.radians(end), steps)

    def phases(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.steps)


@dataclass(frozen=True)
class Backgrounds:
    """Flat coincidence backgrounds and the probability-to-rate conversion (events/s)."""

    lo_lo_rate: float = 2.5
    pair_pair_rate: float = 1.0
    signal_rate_scale: float = 8.536e5

    def __post_init__(self):
        for name in ("lo_lo_rate", "pair_pair_rate", "signal_rate_scale"):
            if not getattr(self, name) >= 0.0:
                raise ConfigurationError(f"{name} must be >= 0")

    @property
    def flat_rate(self) -> float:
        return self.lo_lo_rate + self.pair_pair_rate


@dataclass(frozen=True)
class Source:
    """``single_photon`` (heralded, efficiency eta) or ``coherent`` with amplitude ``gamma``."""

    kind: str = "single_photon"
    gamma: complex = 0j

    def __post_init__(self):
        if self.kind not in ("single_photon", "coherent"):
            raise ConfigurationError(f"unknown source kind {self.kind!r}")
        object.__setattr__(self, "gamma", complex(self.gamma))


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitParams
    engine: str = "numeric"
    sweep: PhaseGrid = field(default_factory=lambda: PhaseGrid.degrees(-70.0, 350.0, 43))
    backgrounds: Backgrounds = field(default_factory=Backgrounds)
    source: Source = field(default_factory=Source)
    seed: int = 20040612
    cutoff_override: tuple = ()
    duration_per_point: float = 60.0
    waveplate_phase: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.engine not in ("numeric", "closed_form"):
            raise ConfigurationError(f"unknown engine {self.engine!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if not self.duration_per_point > 0:
            raise ConfigurationError("duration_per_point must be > 0")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        overrides = self.cutoff_override
        if isinstance(overrides, dict):
            overrides = tuple(sorted(overrides.items()))
        object.__setattr__(self, "cutoff_override", tuple((Mode(*m) if not isinstance(m, Mode) else m, int(c))
                                                          for m, c in overrides))

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def default_config() -> ExperimentConfig:
    """Parameters chosen so the background-free total fringe has visibility 0.91.

    ``r = 0.05``, ``eta = 0.01`` and ``|alpha| = 0.6294`` (``|r alpha| ~ 0.0315``)
    put the eta-weighted total at 91 % visibility; the rate scale makes the sum
    of its extreme rates 18.5 events/s, so with the 3.5 events/s of flat
    background the raw fringe sits at 66 %.
    """
    return ExperimentConfig(circuit=CircuitParams.from_r(0.05, 0.6294, eta=0.01))


@dataclass
class SweepResult:
    phases: np.ndarray
    p_ideal: np.ndarray
    p_false: np.ndarray
    p_total: np.ndarray
    rates: np.ndarray
    single_rates_1: np.ndarray
    single_rates_2: np.ndarray

    def __post_init__(self):
        n = len(self.phases)
        for name in ("p_ideal", "p_false", "p_total", "rates", "single_rates_1", "single_rates_2"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError("sweep result columns must have equal length")

    def __len__(self) -> int:
        return len(self.phases)


def circuit_cutoffs(config: ExperimentConfig) -> dict:
    """Per-mode cutoffs from the truncation policy, after applying overrides.

    Input modes carry the prepared fields (``gamma``, ``sqrt(2) alpha``); each
    arm's signal axis ends up as the detected ``c`` mode (``r alpha`` plus the
    signal field) and its LO axis as ``d`` (about ``t alpha``).
    """
    p = config.circuit
    g = abs(config.source.gamma) if config.source.kind == "coherent" else 0.0
    photons = 1 if config.source.kind == "single_photon" else 0
    cut = {
        IN_SIGNAL: cutoff_for_displacement(g, photons),
        IN_LO: cutoff_for_displacement(math.sqrt(2.0) * p.alpha_mag),
    }
    arm_signal = cutoff_for_displacement(abs(p.r) * p.alpha_mag + g, photons)
    arm_lo = cutoff_for_displacement(p.alpha_mag + g, photons)
    cut.update({T_SIGNAL: arm_signal, R_SIGNAL: arm_signal, T_LO: arm_lo, R_LO: arm_lo})
    for mode, value in config.cutoff_override:
        if mode not in cut:
            raise ConfigurationError(f"cutoff override for unknown mode {mode}")
        cut[mode] = value
    return cut


def prepare_initial_state(config: ExperimentConfig, photon: bool = True) -> FockState:
    """Two-mode input: signal photon (or classical field) plus LO displaced by ``sqrt(2) alpha``.

    ``photon=False`` leaves the signal input in vacuum (source failed to fire).
    """
    cut = circuit_cutoffs(config)
    p = config.circuit
    state = make_vacuum(ModeLayout((IN_SIGNAL, IN_LO), (cut[IN_SIGNAL], cut[IN_LO])))
    if photon:
        if config.source.kind == "single_photon":
            state = create_photon(state, IN_SIGNAL)
        else:
            state = apply_displacement(state, IN_SIGNAL, config.source.gamma)
    lo_amp = math.sqrt(2.0) * p.alpha_mag * complex(math.cos(p.theta), math.sin(p.theta))
    return apply_displacement(state, IN_LO, lo_amp)


def split_at_beam_splitter(state: FockState, cutoffs: dict | None = None) -> FockState:
    """Send each input mode through the 50/50 beam splitter into the T and R arms.

    ``cutoffs`` gives the arm-mode cutoffs; by default the input cutoff is kept.
    Lowering a cutoff after the split books the discarded weight as truncation loss.
    """
    cutoffs = cutoffs or {}
    out = state
    for inp, t_mode, r_mode in ((IN_SIGNAL, T_SIGNAL, R_SIGNAL), (IN_LO, T_LO, R_LO)):
        if inp not in out.layout:
            continue
        source_cut = out.layout.cutoff(inp)
        arm_cut = cutoffs.get(t_mode, source_cut)
        out = relabel_mode(out, inp, t_mode)
        out = set_cutoff(out, t_mode, max(source_cut, arm_cut))
        out = add_vacuum_mode(out, r_mode, cutoffs.get(r_mode, arm_cut))
        out = apply_beam_splitter(out, t_mode, r_mode, SQRT_HALF, SQRT_HALF)
        out = set_cutoff(out, t_mode, arm_cut)
    return out


def post_beam_splitter_state(config: ExperimentConfig, photon: bool = True) -> FockState:
    state = prepare_initial_state(config, photon)
    return split_at_beam_splitter(state, circuit_cutoffs(config))


def detect(arms: FockState, circuit: CircuitParams, delta: float, signal_phase: float = 0.0,
           waveplate_phase: float = 0.0) -> ClickProbabilities:
    """Phase plate, polarizers and threshold detection on a post-beam-splitter state."""
    state = apply_phase(arms, R_LO, -delta)
    if signal_phase:
        state = apply_phase(apply_phase(state, T_SIGNAL, signal_phase), R_SIGNAL, signal_phase)
    if waveplate_phase:
        state = apply_phase(state, R_SIGNAL, waveplate_phase)
    state, c1, _ = apply_polarizer(state, T_SIGNAL, T_LO, circuit.t, circuit.r)
    state, c2, _ = apply_polarizer(state, R_SIGNAL, R_LO, circuit.t, circuit.r)
    return click_statistics(state, c1, c2)


def numeric_click_statistics(config: ExperimentConfig, delta: float, photon: bool = True) -> ClickProbabilities:
    """Click statistics of one sweep point from the Fock-space engine."""
    if config.source.kind == "single_photon" and dense_amplitude_count(config) > DENSE_AMPLITUDE_LIMIT:
        return ArmFactorized(config, photon).click_statistics(delta)
    return detect(post_beam_splitter_state(config, photon), config.circuit, delta,
                  waveplate_phase=config.waveplate_phase)


def dense_amplitude_count(config: ExperimentConfig) -> int:
    cut = circuit_cutoffs(config)
    return math.prod(cut[m] + 1 for m in (T_SIGNAL, T_LO, R_SIGNAL, R_LO))


class ArmFactorized:
    """Heralded-photon evaluation for local oscillators too bright for a dense four-mode tensor.

    After the 50/50 beam splitter the state is ``sum_jk c_jk |j>_T.signal |k>_R.signal``
    times one coherent LO state per arm, so it is a short sum of products of
    two-mode arm states.  Each arm's polarizer and no-click projector are
    applied numerically on its own ``(signal, lo)`` pair, and the click
    probabilities are assembled from the per-arm overlap matrices.
    """

    def __init__(self, config: ExperimentConfig, photon: bool = True):
        if config.source.kind != "single_photon":
            raise ConfigurationError("arm-factorized evaluation needs a single-photon source")
        self.config = config
        self.cut = circuit_cutoffs(config)
        state = make_vacuum(ModeLayout((IN_SIGNAL,), (1,)))
        if photon:
            state = create_photon(state, IN_SIGNAL)
        state = add_vacuum_mode(relabel_mode(state, IN_SIGNAL, T_SIGNAL), R_SIGNAL, 1)
        split = apply_beam_splitter(state, T_SIGNAL, R_SIGNAL, SQRT_HALF, SQRT_HALF).tensor
        self.terms = [(complex(split[j, k]), j, k) for j in (0, 1) for k in (0, 1) if split[j, k] != 0]
        self.photons = sorted({j for _, j, _ in self.terms} | {k for _, _, k in self.terms})
        self.t_arm = self._arm_matrices(T_SIGNAL, T_LO, 0.0)

    def _arm_state(self, signal: Mode, lo: Mode, photons: int, lo_phase: float, signal_phase: float):
        p = self.config.circuit
        state = make_vacuum(ModeLayout((signal, lo), (self.cut[signal], self.cut[lo])))
        for _ in range(photons):
            state = create_photon(state, signal)
        state = apply_displacement(state, lo, p.alpha_mag * complex(math.cos(p.theta), math.sin(p.theta)))
        state = apply_phase(state, lo, lo_phase)
        if signal_phase:
            state = apply_phase(state, signal, signal_phase)
        out, _, _ = apply_polarizer(state, signal, lo, p.t, p.r)
        return out

    def _arm_matrices(self, signal: Mode, lo: Mode, lo_phase: float, signal_phase: float = 0.0):
        """Overlap ``<j|k>`` and no-click ``<j|P0|k>`` matrices over the arm's photon numbers."""
        states = {n: self._arm_state(signal, lo, n, lo_phase, signal_phase) for n in self.photons}
        gram, no_click = {}, {}
        for j, a in states.items():
            for k, b in states.items():
                gram[j, k] = complex(np.vdot(a.tensor, b.tensor))
                no_click[j, k] = complex(np.vdot(a.tensor[0], b.tensor[0]))
        return gram, no_click

    def click_statistics(self, delta: float) -> ClickProbabilities:
        t_gram, t_zero = self.t_arm
        r_gram, r_zero = self._arm_matrices(R_SIGNAL, R_LO, -delta, self.config.waveplate_phase)

        def expect(t_op, r_op):
            acc = 0j
            for c1, j1, k1 in self.terms:
                for c2, j2, k2 in self.terms:
                    acc += np.conj(c1) * c2 * t_op[j1, j2] * r_op[k1, k2]
            return acc.real

        d1, d2, d12 = expect(t_zero, r_gram), expect(t_gram, r_zero), expect(t_zero, r_zero)
        return ClickProbabilities(d1, d2, d12, 1.0 - (d1 + d2 - d12))


def _map(config: ExperimentConfig, fn, items):
    if config.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _assemble(config, phases, p_ideal, p_false, p_total, single_1, single_2) -> SweepResult:
    bg = config.backgrounds
    p_total = np.asarray(p_total, dtype=float)
    return SweepResult(
        phases=np.asarray(phases, dtype=float),
        p_ideal=np.asarray(p_ideal, dtype=float),
        p_false=np.asarray(p_false, dtype=float),
        p_total=p_total,
        rates=bg.signal_rate_scale * p_total + bg.flat_rate,
        single_rates_1=bg.signal_rate_scale * np.asarray(single_1, dtype=float) + bg.flat_rate,
        single_rates_2=bg.signal_rate_scale * np.asarray(single_2, dtype=float) + bg.flat_rate,
    )


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Coincidence probabilities and expected rates over the configured phase grid.

    Rate model: ``signal_rate_scale * P_total + lo_lo_rate + pair_pair_rate``,
    with both backgrounds independent of phase.
    """
    if config.source.kind != "single_photon":
        return run_classical_control(config)
    phases = config.sweep.phases()
    p = config.circuit
    eta = p.eta
    if config.engine == "closed_form":
        pts = [p.with_delta(d + config.waveplate_phase) for d in phases]
        coinc = [p_coincidence_closed(q) for q in pts]
        false = [p_false_closed(q) for q in pts]
        single = [single_click_closed(q) for q in pts]
        total = [eta * c + (1.0 - eta) * f for c, f in zip(coinc, false)]
        return _assemble(config, phases, coinc, false, total, single, single)

    if dense_amplitude_count(config) > DENSE_AMPLITUDE_LIMIT:
        with_photon, without = ArmFactorized(config, True), ArmFactorized(config, False)

        def point(delta):
            return with_photon.click_statistics(delta), without.click_statistics(delta)
    else:
        with_photon = post_beam_splitter_state(config, photon=True)
        without = post_beam_splitter_state(config, photon=False)

        def point(delta):
            a = detect(with_photon, p, delta, waveplate_phase=config.waveplate_phase)
            b = detect(without, p, delta, waveplate_phase=config.waveplate_phase)
            return a, b

    stats = _map(config, point, list(phases))
    coinc = [a.p_coincidence for a, _ in stats]
    false = [b.p_coincidence for _, b in stats]
    total = [eta * a.p_coincidence + (1.0 - eta) * b.p_coincidence for a, b in stats]
    single_1 = [eta * a.p_click_1 + (1.0 - eta) * b.p_click_1 for a, b in stats]
    single_2 = [eta * a.p_click_2 + (1.0 - eta) * b.p_click_2 for a, b in stats]
    return _assemble(config, phases, coinc, false, total, single_1, single_2)


def run_classical_control(config: ExperimentConfig, phase_samples: int = CLASSICAL_PHASE_SAMPLES) -> SweepResult:
    """Sweep with phase-randomized coherent light in place of the heralded photon.

    The classical field's phase relative to the LO is averaged over
    ``phase_samples`` equally spaced values (trapezoid rule on the circle).
    ``p_ideal`` and ``p_total`` hold the averaged coincidence probability;
    ``p_false`` is the LO-only coincidence probability.
    """
    if config.source.kind != "coherent":
        raise ConfigurationError("classical control needs a coherent source")
    if config.engine != "numeric":
        raise ConfigurationError("classical control is only available with the numeric engine")
    phases = config.sweep.phases()
    p = config.circuit
    field_state = post_beam_splitter_state(config, photon=True)
    lo_only = post_beam_splitter_state(config, photon=False)
    sample_phases = 2.0 * math.pi * np.arange(phase_samples) / phase_samples
    needs_average = config.source.gamma != 0

    def point(delta):
        samples = sample_phases if needs_average else [0.0]
        acc = [detect(field_state, p, delta, signal_phase=s, waveplate_phase=config.waveplate_phase)
               for s in samples]
        coinc = math.fsum(a.p_coincidence for a in acc) / len(acc)
        single_1 = math.fsum(a.p_click_1 for a in acc) / len(acc)
        single_2 = math.fsum(a.p_click_2 for a in acc) / len(acc)
        false = detect(lo_only, p, delta).p_coincidence
        return coinc, false, single_1, single_2

    rows = _map(config, point, list(phases))
    coinc, false, single_1, single_2 = (list(col) for col in zip(*rows))
    return _assemble(config, phases, coinc, false, coinc, single_1, single_2)


def matched_gamma(circuit: CircuitParams) -> float:
    """Classical amplitude whose share in each detected mode equals the LO's: ``|t gamma / sqrt 2| = |r alpha|``."""
    return math.sqrt(2.0) * abs(circuit.r) * circuit.alpha_mag / circuit.t


def closed_form_single(p: CircuitParams) -> float:
    return 1.0 - d1_closed(p)
