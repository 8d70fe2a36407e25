import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from fockbell.errors import ConfigurationError, TruncationError
from fockbell.fock import (
    FockState,
    Mode,
    ModeLayout,
    create_photon,
    fidelity,
    from_amplitudes,
    make_vacuum,
    norm_squared,
)
from fockbell.optics import (
    ElementDescriptor,
    apply_beam_splitter,
    apply_circuit,
    apply_displacement,
    apply_phase,
    apply_polarizer,
    coherent_amplitudes,
    displacement_matrix,
)

A, B, C = Mode("T", "signal"), Mode("T", "lo"), Mode("R", "signal")
H = math.sqrt(0.5)


def _dense_ops(n1, n2):
    a1 = np.kron(np.diag(np.sqrt(np.arange(1, n1 + 1)), 1), np.eye(n2 + 1))
    a2 = np.kron(np.eye(n1 + 1), np.diag(np.sqrt(np.arange(1, n2 + 1)), 1))
    return a1, a2


def _low_photon_state(rng, n1, n2, total):
    tensor = np.zeros((n1 + 1, n2 + 1), dtype=complex)
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            if i + j <= total:
                tensor[i, j] = rng.normal() + 1j * rng.normal()
    return tensor / np.linalg.norm(tensor)


@pytest.mark.parametrize("t,r", [(H, H), (0.6, 0.8), (0.8, -0.6), (math.cos(0.3), math.sin(0.3))])
def test_beam_splitter_matches_dense_generator(t, r):
    # a1† -> t a1† + r a2† is generated by theta (a2† a1 - a1† a2) with theta = atan2(r, t);
    # exact on states whose photon number fits in both cutoffs
    n1, n2, total = 7, 6, 5
    rng = np.random.default_rng(3)
    psi = _low_photon_state(rng, n1, n2, total)
    a1, a2 = _dense_ops(n1, n2)
    theta = math.atan2(r, t)
    u = expm(theta * (a2.conj().T @ a1 - a1.conj().T @ a2))
    want = (u @ psi.reshape(-1)).reshape(psi.shape)
    state = FockState(ModeLayout((A, B), (n1, n2)), psi)
    got = apply_beam_splitter(state, A, B, t, r).tensor
    assert np.max(np.abs(got - want)) < 1e-12


def test_single_photon_splits_symmetrically():
    s = create_photon(make_vacuum(ModeLayout((A, C), (2, 2))), A)
    out = apply_beam_splitter(s, A, C, H, H)
    assert out.amplitude((1, 0)) == pytest.approx(H, abs=1e-15)
    assert out.amplitude((0, 1)) == pytest.approx(H, abs=1e-15)


def test_hong_ou_mandel():
    s = create_photon(create_photon(make_vacuum(ModeLayout((A, C), (3, 3))), A), C)
    out = apply_beam_splitter(s, A, C, H, H)
    assert abs(out.amplitude((1, 1))) < 1e-15
    assert out.amplitude((2, 0)) == pytest.approx(-H, abs=1e-15)
    assert out.amplitude((0, 2)) == pytest.approx(H, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-math.pi, math.pi), st.integers(0, 10_000))
def test_beam_splitter_preserves_norm_and_inverts(theta, seed):
    t, r = math.cos(theta), math.sin(theta)
    rng = np.random.default_rng(seed)
    psi = _low_photon_state(rng, 5, 5, 5)
    s = FockState(ModeLayout((A, B, C), (5, 5, 1)), np.stack([psi, 0 * psi], axis=-1))
    out = apply_beam_splitter(s, A, B, t, r)
    assert norm_squared(out) == pytest.approx(1.0, abs=1e-13)
    back = apply_beam_splitter(out, A, B, t, -r)
    assert np.max(np.abs(back.tensor - s.tensor)) < 1e-13


def test_beam_splitter_mode_order_is_a_swap_of_sign():
    # exchanging the two modes is the same as flipping the sign of r
    rng = np.random.default_rng(8)
    s = FockState(ModeLayout((A, B), (4, 4)), _low_photon_state(rng, 4, 4, 4))
    x = apply_beam_splitter(s, A, B, 0.6, 0.8)
    y = apply_beam_splitter(s, B, A, 0.6, -0.8)
    assert np.max(np.abs(x.tensor - y.tensor)) < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_phase_commutes_with_beam_splitter_when_common(phi, theta):
    # a common phase on both inputs commutes with any real mixer (photon number is conserved)
    rng = np.random.default_rng(1)
    s = FockState(ModeLayout((A, B), (4, 4)), _low_photon_state(rng, 4, 4, 4))
    t, r = math.cos(theta), math.sin(theta)
    x = apply_beam_splitter(apply_phase(apply_phase(s, A, phi), B, phi), A, B, t, r)
    y = apply_phase(apply_phase(apply_beam_splitter(s, A, B, t, r), A, phi), B, phi)
    assert np.max(np.abs(x.tensor - y.tensor)) < 1e-13


def test_beam_splitter_overflow_is_booked_then_refused():
    s = from_amplitudes(ModeLayout((A, B), (2, 2)), {(2, 2): 1.0})
    with pytest.raises(TruncationError):
        apply_beam_splitter(s, A, B, H, H)
    loose = FockState(s.layout, s.tensor, budget=1.0)
    out = apply_beam_splitter(loose, A, B, H, H)
    assert out.truncation_loss == pytest.approx(1.0 - norm_squared(out))


def test_mixer_validation():
    s = make_vacuum(ModeLayout((A, B), (2, 2)))
    with pytest.raises(ConfigurationError):
        apply_beam_splitter(s, A, B, 0.5, 0.5)
    with pytest.raises(ConfigurationError):
        apply_beam_splitter(s, A, A, 1.0, 0.0)


def test_polarizer_sends_lo_to_detector_with_plus_r():
    # c† = t a† + r b† on the detected output: the LO in b reaches c with amplitude +r alpha
    r, alpha = 0.3, 0.7
    t = math.sqrt(1 - r * r)
    s = apply_displacement(make_vacuum(ModeLayout((A, B), (12, 20))), B, alpha)
    out, c, d = apply_polarizer(s, A, B, t, r)
    assert c == Mode("T", "c") and d == Mode("T", "d")
    marg_c = out.tensor[:, 0] / out.tensor[0, 0]
    assert marg_c[1] == pytest.approx(r * alpha, abs=1e-12)
    photon = create_photon(make_vacuum(ModeLayout((A, B), (2, 2))), A)
    out, _, _ = apply_polarizer(photon, A, B, t, r)
    assert out.amplitude((1, 0)) == pytest.approx(t, abs=1e-15)
    assert out.amplitude((0, 1)) == pytest.approx(-r, abs=1e-15)


@pytest.mark.parametrize("beta", [0.3, 1.0 + 0.5j, 2.5j, 4.0])
def test_displacement_matches_analytic_coherent_state(beta):
    from fockbell.fock import cutoff_for_displacement
    n = cutoff_for_displacement(abs(beta))
    s = apply_displacement(make_vacuum(ModeLayout((A,), (n,))), A, beta)
    want = coherent_amplitudes(beta, n)
    # the truncated generator only perturbs the top few occupations, where the weight is tiny
    bulk = int(abs(beta) ** 2 + 3 * abs(beta)) + 1
    assert np.max(np.abs(s.tensor[:bulk] - want[:bulk])) < 1e-12
    assert fidelity(s, FockState(s.layout, want)) > 1 - 1e-12


def test_displacement_refuses_small_cutoff():
    with pytest.raises(ConfigurationError):
        apply_displacement(make_vacuum(ModeLayout((A,), (8,))), A, 2.0)


def test_displacement_matrix_is_cached_and_read_only():
    m = displacement_matrix(12, 0.5)
    assert displacement_matrix(12, 0.5) is m
    assert not m.flags.writeable


def test_phase_on_coherent_state_rotates_amplitude():
    n = 17
    s = apply_displacement(make_vacuum(ModeLayout((A,), (n,))), A, 1.0)
    out = apply_phase(s, A, 0.4)
    want = apply_displacement(make_vacuum(s.layout), A, cmath.exp(0.4j))
    assert np.max(np.abs(out.tensor - want.tensor)) < 1e-14


def test_circuit_of_descriptors():
    s = create_photon(make_vacuum(ModeLayout((A, B), (3, 3))), A)
    out = apply_circuit(s, [
        ElementDescriptor("beam_splitter", (A, B), t=H, r=H),
        ElementDescriptor("phase_plate", (B,), phi=math.pi),
        ElementDescriptor("beam_splitter", (A, B), t=H, r=H),
    ])
    # with this sign convention two 50/50 passes swap ports; a pi phase in one arm undoes the swap
    assert abs(out.amplitude((1, 0))) == pytest.approx(1.0, abs=1e-14)
    plain = apply_circuit(s, [ElementDescriptor("beam_splitter", (A, B), t=H, r=H)] * 2)
    assert abs(plain.amplitude((0, 1))) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ConfigurationError):
        ElementDescriptor("mirror", (A,))
