import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvmcs.signal_model import (
    TWO_PI,
    SignalConfig,
    SignalMode,
    SignalRealization,
    correlation_classical_exact,
    correlation_exact,
    correlation_statistical_exact,
    draw_realization,
    draw_realizations,
    phase_at,
    third_order_correlation,
    undersampled_frequency,
)


def test_classical_draw_fixed_envelope():
    cfg = SignalConfig(mode=SignalMode.CLASSICAL, nu_s=1e6, B_amp=0.0315)
    rng = np.random.default_rng(0)
    runs = [draw_realization(cfg, rng) for _ in range(200)]
    assert all(r.B == 0.0315 for r in runs)
    xs = np.array([r.xi0 for r in runs])
    assert xs.min() >= 0.0 and xs.max() < TWO_PI
    # uniform phase: mean near pi, spread near the uniform value
    assert abs(xs.mean() - math.pi) < 0.5
    assert abs(xs.std() - TWO_PI / math.sqrt(12)) < 0.3


def test_statistical_draw_rayleigh_moments():
    b_rms = 0.02
    cfg = SignalConfig(mode=SignalMode.STATISTICAL, nu_s=1e6, B_amp=b_rms)
    rng = np.random.default_rng(1)
    bs = np.array([draw_realization(cfg, rng).B for _ in range(40000)])
    assert bs.min() > 0.0
    assert bs.mean() == pytest.approx(b_rms * math.sqrt(math.pi / 2), rel=0.02)
    assert np.mean(bs**2) == pytest.approx(2 * b_rms**2, rel=0.03)


def test_draw_realizations_per_sensor():
    cfg = SignalConfig(mode=SignalMode.STATISTICAL, nu_s=1e6, B_amp=0.01, n_sensors=5)
    runs = draw_realizations(cfg, np.random.default_rng(2))
    assert [r.sensor_index for r in runs] == [0, 1, 2, 3, 4]
    assert len({r.xi0 for r in runs}) == 5


def test_phase_at():
    run = SignalRealization(B=1.0, xi0=0.25)
    assert phase_at(run, 1e6, 0.0) == pytest.approx(0.25)
    # a quarter signal period advances the phase by pi/2
    assert phase_at(run, 1e6, 0.25e-6) == pytest.approx(0.25 + math.pi / 2)
    # full periods wrap away
    assert phase_at(run, 1e6, 3e-6) == pytest.approx(0.25, abs=1e-9)


def test_undersampled_frequency_known_case():
    # 1 MHz sampled every 15.063 us folds to about 4.18 kHz
    f_u = undersampled_frequency(1e6, 15.063e-6)
    assert f_u == pytest.approx(4182.4, abs=0.5)


def test_undersampled_frequency_edges():
    assert undersampled_frequency(1e6, 1e-6) == pytest.approx(0.0, abs=1e-9)
    # exactly at the Nyquist fold
    assert undersampled_frequency(1.5e6, 1e-6) == pytest.approx(0.5e6)
    with pytest.raises(ValueError):
        undersampled_frequency(1e6, 0.0)


@given(
    nu_s=st.floats(min_value=1e3, max_value=1e8),
    T=st.floats(min_value=1e-7, max_value=1e-3),
)
def test_undersampled_frequency_in_first_zone(nu_s, T):
    f_u = undersampled_frequency(nu_s, T)
    assert 0.0 <= f_u <= 0.5 / T + 1e-9


@given(
    nu_s=st.floats(min_value=1e3, max_value=1e6),
    T=st.floats(min_value=1e-6, max_value=1e-4),
    m=st.integers(min_value=0, max_value=50),
)
def test_undersampled_frequency_shift_invariant(nu_s, T, m):
    # adding an integer number of cycles per sample leaves the alias unchanged
    a = undersampled_frequency(nu_s, T)
    b = undersampled_frequency(nu_s + m / T, T)
    assert a == pytest.approx(b, abs=max(1e-6 * a, 1e-4))


def _mc_correlation(mode, phi_rms, delta, n=400000, seed=11):
    """Monte Carlo oracle for <sin(phi_0) sin(phi_k)> straight from the draws."""
    rng = np.random.default_rng(seed)
    xi = rng.uniform(0.0, TWO_PI, size=n)
    if mode is SignalMode.CLASSICAL:
        amp = math.sqrt(2.0) * phi_rms
    else:
        amp = rng.rayleigh(scale=phi_rms, size=n)
    phi0 = amp * np.cos(xi)
    phik = amp * np.cos(xi + delta)
    return float(np.mean(np.sin(phi0) * np.sin(phik)))


@pytest.mark.parametrize("phi_rms", [0.3, 0.7, 1.0])
@pytest.mark.parametrize("delta", [0.0, 0.9, 2.2])
def test_classical_correlation_against_mc(phi_rms, delta):
    want = _mc_correlation(SignalMode.CLASSICAL, phi_rms, delta)
    got = correlation_classical_exact(phi_rms, delta)
    assert got == pytest.approx(want, abs=3e-3)


@pytest.mark.parametrize("phi_rms", [0.3, 0.7, 1.0])
@pytest.mark.parametrize("delta", [0.0, 0.9, 2.2])
def test_statistical_correlation_against_mc(phi_rms, delta):
    want = _mc_correlation(SignalMode.STATISTICAL, phi_rms, delta)
    got = correlation_statistical_exact(phi_rms, delta)
    assert got == pytest.approx(want, abs=3e-3)


def test_classical_correlation_series_converged():
    # adding terms beyond the default changes nothing at double precision
    a = correlation_classical_exact(1.0, 0.7, n_terms=16)
    b = correlation_classical_exact(1.0, 0.7, n_terms=40)
    assert a == pytest.approx(b, abs=1e-15)


def test_correlation_exact_dispatch():
    assert correlation_exact(SignalMode.CLASSICAL, 0.5, 0.3) == pytest.approx(
        correlation_classical_exact(0.5, 0.3)
    )
    assert correlation_exact(SignalMode.STATISTICAL, 0.5, 0.3) == pytest.approx(
        correlation_statistical_exact(0.5, 0.3)
    )


def test_third_order_expansion_identity():
    # the expansion equals twice the uniform-phase average of the
    # (x - x^3/6)-truncated product at peak amplitude s, term for term
    def truncated_average(s, delta, n=200001):
        xi = np.linspace(0.0, TWO_PI, n)
        p0 = s * np.cos(xi)
        pk = s * np.cos(xi + delta)
        t0 = p0 - p0**3 / 6.0
        tk = pk - pk**3 / 6.0
        return 2.0 * np.trapezoid(t0 * tk, xi) / TWO_PI

    for s in (0.3, 0.7, 1.0):
        for delta in (0.0, 0.9):
            assert third_order_correlation(s, delta) == pytest.approx(
                truncated_average(s, delta), abs=1e-8
            )


def test_third_order_expansion_small_phase_limit():
    # at small phase every correlator collapses to s^2 cos(delta)
    s, delta = 0.05, 0.4
    leading = s * s * math.cos(delta)
    assert third_order_correlation(s, delta) == pytest.approx(leading, rel=2e-3)
    assert correlation_statistical_exact(s, delta) == pytest.approx(leading, rel=3e-3)
    assert correlation_classical_exact(s, delta) == pytest.approx(leading, rel=3e-3)


def test_signal_config_validation():
    with pytest.raises(ValueError):
        SignalConfig(mode=SignalMode.CLASSICAL, nu_s=-1.0, B_amp=0.01)
    with pytest.raises(ValueError):
        SignalConfig(mode=SignalMode.CLASSICAL, nu_s=1e6, B_amp=-0.01)
    with pytest.raises(ValueError):
        SignalConfig(mode=SignalMode.CLASSICAL, nu_s=1e6, B_amp=0.01, n_sensors=0)
