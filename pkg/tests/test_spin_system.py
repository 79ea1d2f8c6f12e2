import pytest
from hypothesis import given, strategies as st

from nvmcs.spin_system import (
    BASIS_LABELS,
    TWO_PI,
    BasisState,
    SpinSystemParams,
    energy_levels,
    mw_transition_frequency,
    rf_transition_frequency,
)

MHZ = TWO_PI * 1e6


def brute_force_energy(params, m_s, m_i):
    """Independent route: evaluate the secular Hamiltonian term by term."""
    return (
        params.D * m_s**2
        + params.gamma_NV * params.B_z * m_s
        + params.A_par * m_s * m_i
        + params.P_quad * (m_i**2 - 2.0 / 3.0)
        - params.gamma_N * params.B_z * m_i
    )


def test_basis_enumeration():
    assert [b.value for b in BasisState] == [1, 2, 3, 4]
    assert BasisState.E0_N0.m_s == 0 and BasisState.E0_N0.m_i == 0
    assert BasisState.EM1_NP1.m_s == -1 and BasisState.EM1_NP1.m_i == 1
    assert len(BASIS_LABELS) == 4


def test_energy_levels_cover_all_nine():
    table = energy_levels(SpinSystemParams())
    assert set(table.levels) == {
        (m_s, m_i) for m_s in (1, 0, -1) for m_i in (1, 0, -1)
    }


def test_energy_levels_against_term_sum():
    params = SpinSystemParams(B_z=1234.5)
    table = energy_levels(params)
    for (m_s, m_i), value in table.levels.items():
        assert value == pytest.approx(
            brute_force_energy(params, m_s, m_i), rel=1e-12, abs=1e-6
        )


def test_energy_mhz_units():
    params = SpinSystemParams()
    table = energy_levels(params)
    assert table.energy_mhz(0, 0) == pytest.approx(
        table.energy(0, 0) / MHZ, rel=1e-12
    )
    assert table.as_mhz()[(-1, 1)] == pytest.approx(
        table.energy(-1, 1) / MHZ, rel=1e-12
    )


def test_mw_transition_centers():
    # the three hyperfine-split electron transitions at the working field
    params = SpinSystemParams()
    centers = {
        m_i: mw_transition_frequency(params, m_i) / MHZ for m_i in (1, 0, -1)
    }
    assert centers[1] == pytest.approx(2856.5, abs=0.05)
    assert centers[0] == pytest.approx(2858.7, abs=0.05)
    assert centers[-1] == pytest.approx(2860.8, abs=0.05)
    # adjacent lines split by |A_par|
    assert centers[0] - centers[1] == pytest.approx(
        abs(params.A_par) / MHZ, rel=1e-9
    )


def test_rf_transition_center():
    params = SpinSystemParams()
    assert rf_transition_frequency(params) / MHZ == pytest.approx(3.41, abs=0.01)


def test_transitions_match_level_differences():
    # closed forms must agree with the energy-table route
    params = SpinSystemParams()
    table = energy_levels(params)
    for m_i in (1, 0, -1):
        diff = abs(table.energy(-1, m_i) - table.energy(0, m_i))
        assert mw_transition_frequency(params, m_i) == pytest.approx(diff, rel=1e-12)
    rf_diff = abs(table.energy(-1, 1) - table.energy(-1, 0))
    assert rf_transition_frequency(params) == pytest.approx(rf_diff, rel=1e-12)


def test_mw_transition_rejects_bad_mi():
    with pytest.raises(ValueError):
        mw_transition_frequency(SpinSystemParams(), 2)


@given(
    b_z=st.floats(min_value=1.0, max_value=5000.0),
    m_i=st.sampled_from([-1, 0, 1]),
)
def test_mw_transition_nonnegative_any_field(b_z, m_i):
    params = SpinSystemParams(B_z=b_z)
    assert mw_transition_frequency(params, m_i) >= 0.0


def test_params_are_frozen():
    params = SpinSystemParams()
    with pytest.raises(Exception):
        params.B_z = 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        SpinSystemParams(D=-1.0)
    with pytest.raises(ValueError):
        SpinSystemParams(B_z=-1.0)
