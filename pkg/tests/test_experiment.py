import math

import numpy as np
import pytest

from fockbell.analysis import fit_fringe_rates
from fockbell.closed_form import (
    CircuitParams,
    d12_closed,
    d1_closed,
    p_coincidence_closed,
    p_false_closed,
)
from fockbell.errors import ConfigurationError
from fockbell.experiment import (
    ArmFactorized,
    Backgrounds,
    PhaseGrid,
    Source,
    circuit_cutoffs,
    default_config,
    detect,
    matched_gamma,
    numeric_click_statistics,
    post_beam_splitter_state,
    run_classical_control,
    run_sweep,
)
from fockbell.fock import Mode


def _cfg(r, a, **kw):
    return default_config().replace(circuit=CircuitParams.from_r(r, a, eta=kw.pop("eta", 1.0)), **kw)


@pytest.mark.parametrize("r,a", [(0.05, 0.6294), (0.1, 2.0), (0.3, 1.0)])
def test_numeric_matches_closed_form(r, a):
    cfg = _cfg(r, a)
    for delta in (0.0, 0.8, math.pi):
        st = numeric_click_statistics(cfg, delta)
        q = cfg.circuit.with_delta(delta)
        assert st.d1 == pytest.approx(d1_closed(q), abs=1e-12)
        assert st.d2 == pytest.approx(d1_closed(q), abs=1e-12)
        assert st.d12 == pytest.approx(d12_closed(q), abs=1e-12)
        assert st.p_coincidence == pytest.approx(p_coincidence_closed(q), abs=1e-12)
        empty = numeric_click_statistics(cfg, delta, photon=False)
        assert empty.p_coincidence == pytest.approx(p_false_closed(q), abs=1e-12)


def test_sweep_engines_agree_with_eta_and_waveplate():
    cfg = _cfg(0.1, 1.5, eta=0.2, waveplate_phase=0.6, sweep=PhaseGrid.degrees(0, 360, 9))
    a = run_sweep(cfg)
    b = run_sweep(cfg.replace(engine="closed_form"))
    for name in ("p_ideal", "p_false", "p_total"):
        assert np.max(np.abs(getattr(a, name) - getattr(b, name))) < 1e-12
    for name in ("rates", "single_rates_1", "single_rates_2"):
        assert np.allclose(getattr(a, name), getattr(b, name), rtol=1e-10, atol=0)


def test_rate_model():
    cfg = default_config()
    sw = run_sweep(cfg.replace(engine="closed_form"))
    bg = cfg.backgrounds
    assert np.array_equal(sw.rates, bg.signal_rate_scale * sw.p_total + bg.flat_rate)


def test_default_config_calibration():
    sw = run_sweep(default_config())
    fit = fit_fringe_rates(sw.phases, sw.rates)
    bg = default_config().backgrounds
    clean = bg.signal_rate_scale * sw.p_total
    assert fit.visibility == pytest.approx(0.66, abs=0.005)
    assert (clean.max() + clean.min()) == pytest.approx(18.5, rel=2e-3)
    assert fit_fringe_rates(sw.phases, clean).visibility == pytest.approx(0.91, abs=0.001)


def test_workers_do_not_change_results():
    cfg = _cfg(0.1, 1.0, sweep=PhaseGrid.degrees(-70, 350, 11))
    a = run_sweep(cfg)
    b = run_sweep(cfg.replace(workers=4))
    assert np.array_equal(a.p_total, b.p_total) and np.array_equal(a.rates, b.rates)


def test_arm_factorized_matches_dense():
    cfg = _cfg(0.2, 2.0, eta=0.5, waveplate_phase=0.4)
    for photon in (True, False):
        fac = ArmFactorized(cfg, photon)
        dense = post_beam_splitter_state(cfg, photon)
        for delta in (0.0, 1.1, math.pi):
            x = fac.click_statistics(delta)
            y = detect(dense, cfg.circuit, delta, waveplate_phase=0.4)
            assert max(abs(x.d1 - y.d1), abs(x.d2 - y.d2), abs(x.d12 - y.d12)) < 1e-13


@pytest.mark.slow
def test_bright_lo_against_closed_form():
    # |alpha| = 20 needs ~530 photons per LO mode; evaluated arm by arm
    cfg = _cfg(0.05, 20.0)
    for delta in (0.0, math.pi / 2, math.pi):
        st = numeric_click_statistics(cfg, delta)
        assert st.p_coincidence == pytest.approx(p_coincidence_closed(cfg.circuit.with_delta(delta)), abs=1e-9)


def test_cutoff_overrides():
    cfg = _cfg(0.1, 1.0, cutoff_override={Mode("T", "lo"): 30})
    assert circuit_cutoffs(cfg)[Mode("T", "lo")] == 30
    with pytest.raises(ConfigurationError):
        circuit_cutoffs(_cfg(0.1, 1.0, cutoff_override={Mode("T", "c"): 3}))
    with pytest.raises(ConfigurationError):
        run_sweep(_cfg(0.1, 3.0, cutoff_override={Mode("input", "lo"): 9}))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PhaseGrid(0.0, 1.0, 1)
    with pytest.raises(ConfigurationError):
        PhaseGrid(1.0, 0.0, 5)
    with pytest.raises(ConfigurationError):
        Backgrounds(-1.0)
    with pytest.raises(ConfigurationError):
        Source("thermal")
    with pytest.raises(ConfigurationError):
        default_config().replace(engine="fast")
    with pytest.raises(ConfigurationError):
        default_config().replace(duration_per_point=0.0)


def test_matched_gamma_balances_detected_amplitudes():
    c = CircuitParams.from_r(0.3, 0.5)
    g = matched_gamma(c)
    assert abs(c.t * g / math.sqrt(2)) == pytest.approx(abs(c.r) * c.alpha_mag)


def _classical(r, a, factor, steps=13):
    c = CircuitParams.from_r(r, a)
    return default_config().replace(
        circuit=c, source=Source("coherent", factor * matched_gamma(c)),
        backgrounds=Backgrounds(0.0, 0.0, 1.0), sweep=PhaseGrid.degrees(-70, 350, steps))


def test_classical_control_stays_below_half():
    for factor in (0.5, 1.0, 2.0):
        sw = run_classical_control(_classical(0.5, 0.1, factor))
        assert fit_fringe_rates(sw.phases, sw.p_total).visibility <= 0.5 + 1e-6
    sw = run_classical_control(_classical(0.5, 0.1, 1.0))
    assert fit_fringe_rates(sw.phases, sw.p_total).visibility == pytest.approx(0.5, abs=0.002)


def test_classical_without_field_is_flat():
    cfg = _classical(0.5, 0.4, 0.0)
    sw = run_classical_control(cfg)
    assert np.ptp(sw.p_total) < 1e-15
    assert np.allclose(sw.p_total, sw.p_false, atol=1e-15)


def test_classical_requires_coherent_numeric():
    with pytest.raises(ConfigurationError):
        run_classical_control(default_config())
    with pytest.raises(ConfigurationError):
        run_classical_control(_classical(0.5, 0.4, 1.0).replace(engine="closed_form"))
    with pytest.raises(ConfigurationError):
        ArmFactorized(_classical(0.5, 0.4, 1.0))
