"""Rotating-frame pulse Hamiltonians, gate propagators and XY8 phase pickup.

Two evolution modes are provided for every gate. The ideal mode returns the
closed-form propagators (block electron rotation, CnNOTe, CeNOTn, all with
their -i prefactors kept verbatim). The physical mode builds the reduced
four-state RWA Hamiltonian with one drive active and exponentiates it, which
serves as the brute-force oracle for the ideal gates and exposes detunings
and finite Rabi frequencies.

Selectivity of the weak drives is not put in by hand. The working frame
leaves the hyperfine splitting -A_par on the diagonal of the untargeted pair,
so a drive with rabi << |A_par| only rotates its resonant pair; leakage into
the detuned pair scales as (rabi/A_par)^2.

The XY8 train itself is not time resolved. Its net effect on resonance is the
accumulated phase phi = (2/pi) gamma_NV B t_DD cos(xi), which the protocol
engine injects into the electron coherence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

from .signal_model import SignalRealization
from .spin_system import SpinSystemParams

UNITARITY_TOL = 1e-12
RESONANCE_TOL = 1e-3  # relative |tau - 1/(2 nu_s)| / tau accepted as resonant


class PulseKind(Enum):
    STRONG_MW = "strong_mw"
    SELECTIVE_MW_CNNOTE = "selective_mw_cnnote"
    SELECTIVE_RF_CENOTN = "selective_rf_cenotn"


@dataclass(frozen=True)
class PulseSpec:
    """One drive pulse: kind, Rabi frequency (rad/s), phase, area (rad).

    detuning_mw / detuning_rf are carrier detunings in rad/s entering the
    rotating-frame diagonal; both default to resonance.
    """

    kind: PulseKind
    rabi: float
    area: float
    phase: float = 0.0
    detuning_mw: float = 0.0
    detuning_rf: float = 0.0

    def __post_init__(self):
        if self.area < 0:
            raise ValueError("pulse area must be non-negative")
        if self.rabi <= 0:
            raise ValueError("rabi must be positive for a finite-duration pulse")

    @property
    def duration(self) -> float:
        return self.area / self.rabi


def _check_unitary(u: np.ndarray) -> np.ndarray:
    dev = np.abs(u @ u.conj().T - np.eye(4)).max()
    if dev > UNITARITY_TOL:
        raise ArithmeticError(f"propagator not unitary, max deviation {dev:.3e}")
    return u


def strong_mw_propagator(area: float, phase: float = 0.0) -> np.ndarray:
    """Strong MW rotation acting identically on both nuclear sectors.

    cos(A/2) on the diagonal, -i e^{-i xi} sin(A/2) on (1,3) and (2,4),
    -i e^{+i xi} sin(A/2) on (3,1) and (4,2).
    """
    c = math.cos(area / 2.0)
    s = math.sin(area / 2.0)
    em = -1j * np.exp(-1j * phase) * s
    ep = -1j * np.exp(+1j * phase) * s
    u = np.array(
        [
            [c, 0, em, 0],
            [0, c, 0, em],
            [ep, 0, c, 0],
            [0, ep, 0, c],
        ],
        dtype=complex,
    )
    return _check_unitary(u)


def cnnote_propagator() -> np.ndarray:
    """Electron flip conditioned on m_I = +1: |2> -> -i|4>, |4> -> -i|2>."""
    u = np.array(
        [
            [1, 0, 0, 0],
            [0, 0, 0, -1j],
            [0, 0, 1, 0],
            [0, -1j, 0, 0],
        ],
        dtype=complex,
    )
    return _check_unitary(u)


def cenotn_propagator() -> np.ndarray:
    """Nuclear flip conditioned on m_s = -1: |3> -> -i|4>, |4> -> -i|3>."""
    u = np.array(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, -1j],
            [0, 0, -1j, 0],
        ],
        dtype=complex,
    )
    return _check_unitary(u)


def rwa_hamiltonian(spec: PulseSpec, params: SpinSystemParams) -> np.ndarray:
    """Reduced four-state RWA Hamiltonian with only spec.kind's drive active.

    The MW drive couples (1,3) and (2,4) with (rabi/2) e^{-+i xi}; the RF
    drive couples (1,2) and (3,4) with (rabi/2) e^{+-i xi}. The diagonal is
    (-A_par, d_RF, -d_MW, d_RF - d_MW); the strong MW kind drops -A_par since
    the strong drive overrides the hyperfine splitting during the pulse.
    """
    h = np.zeros((4, 4), dtype=complex)
    d_mw = spec.detuning_mw
    d_rf = spec.detuning_rf
    h[1, 1] = d_rf
    h[2, 2] = -d_mw
    h[3, 3] = d_rf - d_mw
    if spec.kind is not PulseKind.STRONG_MW:
        h[0, 0] = -params.A_par

    half = 0.5 * spec.rabi
    if spec.kind in (PulseKind.STRONG_MW, PulseKind.SELECTIVE_MW_CNNOTE):
        cpl = half * np.exp(-1j * spec.phase)
        h[0, 2] = cpl
        h[1, 3] = cpl
        h[2, 0] = np.conj(cpl)
        h[3, 1] = np.conj(cpl)
    else:
        cpl = half * np.exp(+1j * spec.phase)
        h[0, 1] = cpl
        h[2, 3] = cpl
        h[1, 0] = np.conj(cpl)
        h[3, 2] = np.conj(cpl)
    return h


def finite_duration_propagator(
    spec: PulseSpec, params: SpinSystemParams | None = None
) -> np.ndarray:
    """exp(-i H_rwa t) with t = area/rabi. Hard error if not unitary."""
    if params is None:
        params = SpinSystemParams()
    h = rwa_hamiltonian(spec, params)
    u = expm(-1j * h * spec.duration)
    dev = np.abs(u @ u.conj().T - np.eye(4)).max()
    if dev > 1e-9:
        raise ArithmeticError(
            f"matrix exponential lost unitarity (deviation {dev:.3e})"
        )
    return u


def phase_injection(phi: float) -> np.ndarray:
    """Signal phase pickup of the m_s = -1 manifold: diag(1, 1, e^{i phi}, e^{i phi})."""
    return np.diag([1.0, 1.0, np.exp(1j * phi), np.exp(1j * phi)]).astype(complex)


@dataclass(frozen=True)
class XY8Spec:
    """XY8 block: n_repeats repetitions of 8 pi pulses spaced tau seconds."""

    n_repeats: int = 1
    tau: float = 500e-9

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def t_dd(self) -> float:
        return 8.0 * self.n_repeats * self.tau


def resonant_tau(nu_s: float) -> float:
    """Inter-pulse spacing tuned to the signal: tau = 1/(2 nu_s)."""
    return 1.0 / (2.0 * nu_s)


@dataclass(frozen=True)
class PhaseSample:
    """Accumulated XY8 phase and whether tau was resonant with the signal."""

    phi: float
    resonant: bool


def xy8_phase(
    spec: XY8Spec,
    params: SpinSystemParams,
    realization: SignalRealization,
    nu_s: float,
) -> PhaseSample:
    """Accumulated phase phi = (2/pi) gamma_NV B t_DD cos(xi) of one block.

    Off-resonant tau (relative mismatch beyond RESONANCE_TOL) clears the
    resonant flag; the phase is still the on-resonance expression, which is
    what the ideal evolution mode injects.
    """
    mismatch = abs(spec.tau - resonant_tau(nu_s)) / spec.tau
    phi = (2.0 / math.pi) * params.gamma_NV * realization.B * spec.t_dd * math.cos(
        realization.xi0
    )
    return PhaseSample(phi=phi, resonant=bool(mismatch <= RESONANCE_TOL))
