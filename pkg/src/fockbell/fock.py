"""Pure states of a few bosonic modes in a truncated occupation-number basis.

Amplitudes are stored densely as a tensor with one axis per mode, ordered as
the layout (mode 0 slowest, i.e. row-major).  Every operation returns a new
:class:`FockState`; nothing is mutated in place.

Each state carries the probability weight that has been pushed past a cutoff
so far (``truncation_loss``).  Operations raise :class:`TruncationError` once
that loss exceeds the state's budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, TruncationError

ARMS = ("input", "T", "R")
CHANNELS = ("signal", "lo", "c", "d")
MAX_MODES = 4

#: Default bound on the total weight lost to truncation over a full circuit.
DEFAULT_TRUNCATION_BUDGET = 1e-9


class Mode(NamedTuple):
    """Optical mode label: the arm it lives in and its polarization channel.

    ``signal``/``lo`` are the polarizations of the single-photon and
    local-oscillator beams; ``c``/``d`` are the transmitted (detected) and
    rejected outputs of an arm's polarizer.
    """

    arm: str
    channel: str

    def __str__(self) -> str:
        return f"{self.arm}.{self.channel}"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        arm, sep, channel = text.partition(".")
        if not sep:
            raise ConfigurationError(f"mode label {text!r} is not of the form ARM.CHANNEL")
        return cls(arm, channel)


def _as_mode(label) -> Mode:
    if isinstance(label, Mode):
        return label
    if isinstance(label, str):
        return Mode.parse(label)
    try:
        return Mode(*label)
    except TypeError:
        raise ConfigurationError(f"cannot interpret {label!r} as a mode label") from None


def cutoff_for_displacement(beta_mag: float, photons: int = 0) -> int:
    """Per-mode cutoff for a mode displaced by ``|beta|`` that may also hold extra photons.

    ``max(8, ceil(|b|^2 + 6|b| + 10))`` keeps the lost coherent-state weight
    below 1e-12 for ``|b| <= 4``; ``photons`` adds head room for Fock
    excitations created on top of the displacement.
    """
    b = abs(beta_mag)
    return max(8, math.ceil(b * b + 6.0 * b + 10.0)) + int(photons)


@dataclass(frozen=True)
class ModeLayout:
    """Ordered registry of modes and their per-mode cutoffs."""

    modes: tuple[Mode, ...]
    cutoffs: tuple[int, ...]

    def __post_init__(self):
        modes = tuple(_as_mode(m) for m in self.modes)
        cutoffs = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "cutoffs", cutoffs)
        if not 1 <= len(modes) <= MAX_MODES:
            raise ConfigurationError(f"layout must hold 1..{MAX_MODES} modes, got {len(modes)}")
        if len(cutoffs) != len(modes):
            raise ConfigurationError("one cutoff per mode is required")
        if len(set(modes)) != len(modes):
            raise ConfigurationError(f"duplicate mode labels in {modes}")
        for m in modes:
            if m.arm not in ARMS or m.channel not in CHANNELS:
                raise ConfigurationError(f"unknown mode label {m}")
        for m, c in zip(modes, cutoffs):
            if c < 1:
                raise ConfigurationError(f"cutoff for {m} must be >= 1, got {c}")

    @classmethod
    def of(cls, spec: Mapping | Sequence) -> "ModeLayout":
        """Build from ``{mode: cutoff}`` or a sequence of ``(mode, cutoff)`` pairs."""
        items = list(spec.items()) if isinstance(spec, Mapping) else list(spec)
        return cls(tuple(m for m, _ in items), tuple(c for _, c in items))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.modes)

    def __contains__(self, label) -> bool:
        try:
            return _as_mode(label) in self.modes
        except ConfigurationError:
            return False

    def axis(self, label) -> int:
        mode = _as_mode(label)
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ConfigurationError(f"mode {mode} is not in layout {self.modes}") from None

    def cutoff(self, label) -> int:
        return self.cutoffs[self.axis(label)]

    def index(self, occupation: Sequence[int]) -> int:
        """Flat basis index of an occupation tuple (row-major, mode 0 slowest)."""
        if len(occupation) != len(self.modes):
            raise ConfigurationError("occupation tuple length does not match the layout")
        for n, c in zip(occupation, self.cutoffs):
            if not 0 <= n <= c:
                raise ConfigurationError(f"occupation {tuple(occupation)} outside cutoffs {self.cutoffs}")
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def occupation(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise ConfigurationError(f"basis index {index} out of range")
        return tuple(int(n) for n in np.unravel_index(index, self.dims))

    def with_mode(self, label, cutoff: int) -> "ModeLayout":
        return ModeLayout(self.modes + (_as_mode(label),), self.cutoffs + (cutoff,))

    def relabel(self, old, new) -> "ModeLayout":
        i = self.axis(old)
        modes = list(self.modes)
        modes[i] = _as_mode(new)
        return ModeLayout(tuple(modes), self.cutoffs)

    def with_cutoff(self, label, cutoff: int) -> "ModeLayout":
        i = self.axis(label)
        cutoffs = list(self.cutoffs)
        cutoffs[i] = cutoff
        return ModeLayout(self.modes, tuple(cutoffs))


@dataclass(frozen=True, eq=False)
class FockState:
    """Immutable pure state over a :class:`ModeLayout`.

    ``tensor`` has shape ``layout.dims``; ``amplitudes`` is its flat view.
    """

    layout: ModeLayout
    tensor: np.ndarray
    truncation_loss: float = 0.0
    budget: float = field(default=DEFAULT_TRUNCATION_BUDGET)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.tensor, dtype=np.complex128)
        if arr.size != self.layout.size:
            raise ConfigurationError(
                f"amplitude vector has length {arr.size}, layout needs {self.layout.size}"
            )
        arr = arr.reshape(self.layout.dims)
        # read-only input already belongs to a state; anything writable is copied
        if self.tensor.flags.writeable and np.shares_memory(arr, self.tensor):
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "tensor", arr)
        if self.truncation_loss > self.budget:
            raise TruncationError(
                f"truncation loss {self.truncation_loss:.3e} exceeds budget {self.budget:.1e}"
            )

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    @property
    def modes(self) -> tuple[Mode, ...]:
        return self.layout.modes

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return complex(self.tensor[tuple(occupation)])

    def evolve(self, tensor: np.ndarray, layout: ModeLayout | None = None, lost: float = 0.0) -> "FockState":
        """New state with replaced amplitudes, accumulating ``lost`` into the truncation loss.

        ``tensor`` is taken over without a copy; callers pass freshly computed arrays.
        """
        tensor = np.asarray(tensor)
        if tensor.flags.writeable and tensor.flags.owndata:
            tensor.setflags(write=False)
        return FockState(
            layout if layout is not None else self.layout,
            tensor,
            truncation_loss=self.truncation_loss + max(lost, 0.0),
            budget=self.budget,
        )

    def __repr__(self) -> str:
        return f"FockState(modes={[str(m) for m in self.modes]}, cutoffs={self.layout.cutoffs})"


def _sum_sq(values: np.ndarray) -> float:
    return kernels.sum_squares(values)


def make_vacuum(layout: ModeLayout, budget: float = DEFAULT_TRUNCATION_BUDGET) -> FockState:
    if not isinstance(layout, ModeLayout):
        layout = ModeLayout.of(layout)
    tensor = np.zeros(layout.dims, dtype=np.complex128)
    tensor[(0,) * len(layout)] = 1.0
    return FockState(layout, tensor, budget=budget)


def from_amplitudes(layout: ModeLayout, amplitudes: Mapping[Sequence[int], complex]) -> FockState:
    """State with the given ``{occupation tuple: amplitude}`` entries, zero elsewhere."""
    tensor = np.zeros(layout.dims, dtype=np.complex128)
    for occ, amp in amplitudes.items():
        tensor[tuple(occ)] = amp
    return FockState(layout, tensor)


def create_photon(state: FockState, mode) -> FockState:
    """Apply the creation operator ``|n> -> sqrt(n+1)|n+1>`` on one mode (no renormalization)."""
    ax = state.layout.axis(mode)
    nmax = state.layout.cutoffs[ax]
    src = np.moveaxis(state.tensor, ax, 0)
    if np.any(src[nmax] != 0):
        raise TruncationError(f"creating a photon in {state.modes[ax]} would exceed cutoff {nmax}")
    out = np.zeros_like(src)
    factors = np.sqrt(np.arange(1, nmax + 1, dtype=float))
    out[1:] = src[:-1] * factors.reshape((-1,) + (1,) * (src.ndim - 1))
    return state.evolve(np.moveaxis(out, 0, ax))


def norm_squared(state: FockState) -> float:
    return _sum_sq(state.tensor)


def normalized(state: FockState) -> FockState:
    n = norm_squared(state)
    if n == 0.0:
        raise ConfigurationError("cannot normalize the zero vector")
    return state.evolve(state.tensor / math.sqrt(n))


def prob_zero_in_modes(state: FockState, modes: Iterable) -> float:
    """Expectation of the projector onto zero photons in every listed mode (identity elsewhere)."""
    axes = sorted({state.layout.axis(m) for m in modes})
    if not axes:
        raise ConfigurationError("at least one mode is required")
    index = tuple(0 if ax in axes else slice(None) for ax in range(len(state.layout)))
    return _sum_sq(state.tensor[index])


def mean_photon_number(state: FockState, mode) -> float:
    """``<n>`` of one mode, normalized by the state's norm."""
    ax = state.layout.axis(mode)
    probs = np.abs(state.tensor) ** 2
    marginal = probs.sum(axis=tuple(i for i in range(probs.ndim) if i != ax))
    return float(np.dot(np.arange(marginal.size), marginal) / marginal.sum())


def overlap(a: FockState, b: FockState) -> complex:
    """Inner product <a|b>; both states must share the same layout."""
    if a.layout != b.layout:
        raise ConfigurationError("states live on different layouts")
    return complex(np.vdot(a.tensor, b.tensor))


def fidelity(a: FockState, b: FockState) -> float:
    return abs(overlap(a, b)) ** 2 / (norm_squared(a) * norm_squared(b))


def add_vacuum_mode(state: FockState, mode, cutoff: int) -> FockState:
    """Tensor a new vacuum mode onto the end of the layout."""
    layout = state.layout.with_mode(mode, cutoff)
    tensor = np.zeros(layout.dims, dtype=np.complex128)
    tensor[..., 0] = state.tensor
    return state.evolve(tensor, layout)


def relabel_mode(state: FockState, old, new) -> FockState:
    return state.evolve(state.tensor, state.layout.relabel(old, new))


def set_cutoff(state: FockState, mode, cutoff: int) -> FockState:
    """Change one mode's cutoff: raising pads with zeros, lowering books the discarded weight as truncation loss."""
    ax = state.layout.axis(mode)
    old = state.layout.cutoffs[ax]
    layout = state.layout.with_cutoff(mode, cutoff)
    if cutoff == old:
        return state
    if cutoff > old:
        tensor = np.zeros(layout.dims, dtype=np.complex128)
        index = tuple(slice(0, old + 1) if i == ax else slice(None) for i in range(len(layout)))
        tensor[index] = state.tensor
        return state.evolve(tensor, layout)
    kept = np.take(state.tensor, np.arange(cutoff + 1), axis=ax)
    dropped = np.take(state.tensor, np.arange(cutoff + 1, old + 1), axis=ax)
    return state.evolve(kept, layout, lost=_sum_sq(dropped))
