import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvmcs.pulse_gates import (
    PhaseSample,
    PulseKind,
    PulseSpec,
    XY8Spec,
    cenotn_propagator,
    cnnote_propagator,
    finite_duration_propagator,
    phase_injection,
    resonant_tau,
    rwa_hamiltonian,
    strong_mw_propagator,
    xy8_phase,
)
from nvmcs.signal_model import SignalRealization
from nvmcs.spin_system import SpinSystemParams

PARAMS = SpinSystemParams()


def assert_unitary(u, tol=1e-12):
    assert np.abs(u @ u.conj().T - np.eye(4)).max() <= tol


def test_strong_mw_matrix_form():
    area, xi = 1.234, 0.567
    c = math.cos(area / 2)
    s = math.sin(area / 2)
    em = -1j * np.exp(-1j * xi) * s
    ep = -1j * np.exp(+1j * xi) * s
    want = np.array(
        [
            [c, 0, em, 0],
            [0, c, 0, em],
            [ep, 0, c, 0],
            [0, ep, 0, c],
        ]
    )
    got = strong_mw_propagator(area, xi)
    assert np.abs(got - want).max() < 1e-15
    assert_unitary(got)


def test_strong_mw_special_angles():
    # pi/2 about x: equal superposition with -i weights
    u = strong_mw_propagator(math.pi / 2, 0.0)
    e0 = np.array([1, 0, 0, 0], dtype=complex)
    out = u @ e0
    assert out[0] == pytest.approx(1 / math.sqrt(2))
    assert out[2] == pytest.approx(-1j / math.sqrt(2))
    # pi pulse is a full swap up to the spinor -i
    u_pi = strong_mw_propagator(math.pi, 0.0)
    assert abs(u_pi[2, 0] + 1j) < 1e-15
    assert abs(u_pi[0, 0]) < 1e-15
    # 2 pi returns -identity (spin-1/2 behaviour of the driven pair)
    u_2pi = strong_mw_propagator(2 * math.pi, 0.0)
    assert np.abs(u_2pi + np.eye(4)).max() < 1e-12


def test_strong_mw_composition():
    # two pi/2 pulses of the same phase compose to one pi pulse
    u_half = strong_mw_propagator(math.pi / 2, 0.3)
    u_full = strong_mw_propagator(math.pi, 0.3)
    assert np.abs(u_half @ u_half - u_full).max() < 1e-12


def test_cnnote_matrix_exact():
    want = np.array(
        [
            [1, 0, 0, 0],
            [0, 0, 0, -1j],
            [0, 0, 1, 0],
            [0, -1j, 0, 0],
        ],
        dtype=complex,
    )
    got = cnnote_propagator()
    assert np.array_equal(got, want)
    assert_unitary(got)


def test_cenotn_matrix_exact():
    want = np.array(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, -1j],
            [0, 0, -1j, 0],
        ],
        dtype=complex,
    )
    got = cenotn_propagator()
    assert np.array_equal(got, want)
    assert_unitary(got)


def test_physical_strong_mw_reproduces_ideal():
    # strong drive: the RWA Hamiltonian drops the hyperfine diagonal, so the
    # exponentiated evolution must equal the closed form for any rabi
    for area, xi in [(math.pi / 2, 0.0), (math.pi, 1.1), (0.77, -2.0)]:
        spec = PulseSpec(kind=PulseKind.STRONG_MW, rabi=2e8, area=area, phase=xi)
        u_phys = finite_duration_propagator(spec, PARAMS)
        u_ideal = strong_mw_propagator(area, xi)
        assert np.abs(u_phys - u_ideal).max() < 1e-9


def _leakage(u, driven):
    """Worst population escaping the driven pair over driven basis inputs."""
    idle = [i for i in range(4) if i not in driven]
    worst = 0.0
    for i in driven:
        e = np.zeros(4, dtype=complex)
        e[i] = 1.0
        out = u @ e
        worst = max(worst, sum(abs(out[j]) ** 2 for j in idle))
    return worst


def test_selective_mw_rotates_conditional_pair():
    rabi = abs(PARAMS.A_par) / 100.0
    spec = PulseSpec(kind=PulseKind.SELECTIVE_MW_CNNOTE, rabi=rabi, area=math.pi)
    u = finite_duration_propagator(spec, PARAMS)
    # resonant pair (|2>,|4>) flips like the ideal CnNOTe
    assert abs(u[3, 1] + 1j) < 1e-3
    assert abs(u[1, 3] + 1j) < 1e-3
    assert _leakage(u, driven=(1, 3)) <= 1e-3
    # the hyperfine-detuned pair stays put in population
    assert abs(abs(u[0, 0]) - 1.0) < 1e-3
    assert abs(u[2, 0]) ** 2 <= 1e-3


def test_selective_rf_rotates_conditional_pair():
    rabi = abs(PARAMS.A_par) / 100.0
    spec = PulseSpec(kind=PulseKind.SELECTIVE_RF_CENOTN, rabi=rabi, area=math.pi)
    u = finite_duration_propagator(spec, PARAMS)
    # resonant pair (|3>,|4>) flips like the ideal CeNOTn
    assert abs(u[3, 2] + 1j) < 1e-3
    assert abs(u[2, 3] + 1j) < 1e-3
    assert _leakage(u, driven=(2, 3)) <= 1e-3
    assert abs(u[1, 0]) ** 2 <= 1e-3


def test_rwa_hamiltonian_is_hermitian():
    for kind in PulseKind:
        spec = PulseSpec(kind=kind, rabi=1e5, area=1.0, phase=0.4,
                         detuning_mw=2e3, detuning_rf=-3e3)
        h = rwa_hamiltonian(spec, PARAMS)
        assert np.abs(h - h.conj().T).max() == 0.0


def test_detuned_selective_pulse_underrotates():
    rabi = abs(PARAMS.A_par) / 100.0
    on = PulseSpec(kind=PulseKind.SELECTIVE_MW_CNNOTE, rabi=rabi, area=math.pi)
    off = PulseSpec(
        kind=PulseKind.SELECTIVE_MW_CNNOTE,
        rabi=rabi,
        area=math.pi,
        detuning_mw=10.0 * rabi,
    )
    u_on = finite_duration_propagator(on, PARAMS)
    u_off = finite_duration_propagator(off, PARAMS)
    assert abs(u_on[3, 1]) > 0.99
    assert abs(u_off[3, 1]) < 0.2


def test_pulse_spec_validation():
    with pytest.raises(ValueError):
        PulseSpec(kind=PulseKind.STRONG_MW, rabi=1e6, area=-0.1)
    with pytest.raises(ValueError):
        PulseSpec(kind=PulseKind.STRONG_MW, rabi=0.0, area=1.0)
    spec = PulseSpec(kind=PulseKind.STRONG_MW, rabi=2e6, area=1.0)
    assert spec.duration == pytest.approx(0.5e-6)


def test_phase_injection():
    phi = 0.813
    u = phase_injection(phi)
    want = np.diag([1, 1, np.exp(1j * phi), np.exp(1j * phi)])
    assert np.abs(u - want).max() < 1e-15
    assert_unitary(u)
    # phases add under composition
    v = phase_injection(0.2) @ phase_injection(0.3)
    assert np.abs(v - phase_injection(0.5)).max() < 1e-15


def test_xy8_spec():
    spec = XY8Spec(n_repeats=3, tau=0.5e-6)
    assert spec.t_dd == pytest.approx(12e-6)
    with pytest.raises(ValueError):
        XY8Spec(n_repeats=0)
    with pytest.raises(ValueError):
        XY8Spec(tau=0.0)


def test_resonant_tau():
    assert resonant_tau(1e6) == pytest.approx(0.5e-6)


def test_xy8_phase_formula():
    nu_s = 1e6
    spec = XY8Spec(n_repeats=1, tau=resonant_tau(nu_s))
    run = SignalRealization(B=0.0315, xi0=0.9)
    sample = xy8_phase(spec, PARAMS, run, nu_s)
    want = (2 / math.pi) * PARAMS.gamma_NV * run.B * spec.t_dd * math.cos(run.xi0)
    assert isinstance(sample, PhaseSample)
    assert sample.phi == pytest.approx(want, rel=1e-12)
    assert sample.resonant


def test_xy8_phase_flags_off_resonance():
    nu_s = 1e6
    spec = XY8Spec(n_repeats=1, tau=1.05 * resonant_tau(nu_s))
    sample = xy8_phase(spec, PARAMS, SignalRealization(B=0.01, xi0=0.0), nu_s)
    assert not sample.resonant


@given(
    area=st.floats(min_value=0.0, max_value=4.0 * math.pi),
    xi=st.floats(min_value=-math.pi, max_value=math.pi),
)
def test_strong_mw_always_unitary(area, xi):
    assert_unitary(strong_mw_propagator(area, xi))


@given(phi=st.floats(min_value=-10.0, max_value=10.0))
def test_phase_injection_preserves_populations(phi):
    u = phase_injection(phi)
    assert np.abs(np.abs(np.diag(u)) - 1.0).max() < 1e-12
