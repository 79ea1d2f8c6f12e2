"""NV electron / 14N nuclear spin system: parameters, levels, transitions.

The ground-state Hamiltonian (secular part, transverse hyperfine neglected)

    H = D Sz^2 + gamma_NV Bz Sz + A_par Sz Iz + P (Iz^2 - 2/3) - gamma_N Bz Iz

acts on m_s in {+1, 0, -1} and m_I in {+1, 0, -1}. The nuclear Zeeman term
enters with a minus sign for this sign convention of gamma_N. Dynamics in the
rest of the package are restricted to the four-state working subspace

    |1> = |0>e|0>n,  |2> = |0>e|+1>n,  |3> = |-1>e|0>n,  |4> = |-1>e|+1>n

(the m_s = +1 manifold only appears in the energy table). All frequencies are
stored internally as angular frequencies in rad/s; magnetic fields in Gauss.
Interface helpers convert to Hz / MHz for configuration and reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

TWO_PI = 6.283185307179586


class BasisState(IntEnum):
    """Index 1..4 of the working basis, ordering fixed package-wide."""

    E0_N0 = 1     # |0>e |0>n
    E0_NP1 = 2    # |0>e |+1>n
    EM1_N0 = 3    # |-1>e |0>n
    EM1_NP1 = 4   # |-1>e |+1>n

    @property
    def m_s(self) -> int:
        return 0 if self in (BasisState.E0_N0, BasisState.E0_NP1) else -1

    @property
    def m_i(self) -> int:
        return 0 if self in (BasisState.E0_N0, BasisState.EM1_N0) else 1


BASIS_LABELS = ("|0>e|0>n", "|0>e|+1>n", "|-1>e|0>n", "|-1>e|+1>n")


@dataclass(frozen=True)
class SpinSystemParams:
    """Physical constants and static field. Angular frequencies in rad/s.

    D         zero-field splitting
    A_par     axial hyperfine coupling (signed)
    P_quad    nuclear quadrupole splitting (signed)
    gamma_NV  electron gyromagnetic ratio, rad/s per Gauss
    gamma_N   14N nuclear gyromagnetic ratio, rad/s per Gauss
    B_z       static field along the NV axis, Gauss
    """

    D: float = TWO_PI * 2.87e9
    A_par: float = -TWO_PI * 2.166e6
    P_quad: float = -TWO_PI * 4.945e6
    gamma_NV: float = TWO_PI * 2.803e6
    gamma_N: float = TWO_PI * 308.0
    B_z: float = 2043.763

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError("D must be positive")
        if self.B_z < 0:
            raise ValueError("B_z must be non-negative")
        if self.gamma_NV <= 0 or self.gamma_N <= 0:
            raise ValueError("gyromagnetic ratios must be positive")


@dataclass(frozen=True)
class EnergyTable:
    """Closed-form energies E(m_s, m_I) of the nine hyperfine levels, rad/s."""

    levels: dict

    def energy(self, m_s: int, m_i: int) -> float:
        return self.levels[(m_s, m_i)]

    def energy_mhz(self, m_s: int, m_i: int) -> float:
        return self.levels[(m_s, m_i)] / TWO_PI / 1e6

    def as_mhz(self) -> dict:
        return {k: v / TWO_PI / 1e6 for k, v in self.levels.items()}


def energy_levels(params: SpinSystemParams) -> EnergyTable:
    """All nine E(m_s, m_I) from the secular Hamiltonian, closed form."""
    levels = {}
    for m_s in (+1, 0, -1):
        for m_i in (+1, 0, -1):
            e = (
                params.D * m_s * m_s
                + params.gamma_NV * params.B_z * m_s
                + params.A_par * m_s * m_i
                + params.P_quad * (m_i * m_i - 2.0 / 3.0)
                - params.gamma_N * params.B_z * m_i
            )
            levels[(m_s, m_i)] = e
    return EnergyTable(levels=levels)


def mw_transition_frequency(params: SpinSystemParams, m_i: int) -> float:
    """|0>e <-> |-1>e transition at fixed m_I: |gamma_NV Bz - D + m_I A_par|.

    Returns an angular frequency in rad/s. Raises on m_I outside {-1, 0, +1}.
    """
    if m_i not in (-1, 0, 1):
        raise ValueError(f"m_i must be -1, 0 or +1, got {m_i}")
    return abs(params.gamma_NV * params.B_z - params.D + m_i * params.A_par)


def rf_transition_frequency(params: SpinSystemParams) -> float:
    """Nuclear |0>n <-> |+1>n transition within m_s = -1: |P - A_par - gamma_N Bz|."""
    return abs(params.P_quad - params.A_par - params.gamma_N * params.B_z)
