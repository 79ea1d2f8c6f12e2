"""Density-matrix execution of the MCS, CS and QDyne protocols.

All three protocols are literal gate pipelines on the four-level working
basis |1> = |0>e|0>n, |2> = |0>e|+1>n, |3> = |-1>e|0>n, |4> = |-1>e|+1>n.

MCS: one storage block writes the first signal phase phi_0 onto the nuclear
population difference (pi/2 -> phase -> pi/2(Y) -> CeNOTn), then M read
cycles each apply the memory decay channel, an electron reinit channel, a
second Ramsey block with phase phi_k and a CnNOTe mapping the stored
correlation onto the electron. In ideal mode with no decay every record
satisfies p0_e = (1 + sin(phi_0) sin(phi_k)) / 2; decay damps the correlated
part by exp(-k T / T1_eff) with one laser event per cycle.

CS: same storage and read blocks, but a single record per run at sweep index
k after an idle of k*T with free nuclear decay only (the electron is not
touched between the acquisitions, so no laser depolarization accrues).

QDyne: no memory involvement at all; each record is a fresh sensor Ramsey
with p0_e = (1 + sin(phase)) / 2 where the phase of an N-sensor ensemble is
the per-sensor mean (simultaneous optical readout sums photons, which
averages phases before the sine nonlinearity).

The channels are trace preserving and act only on populations / nuclear
coherences: electron reinit pumps the electron to |0>e with probability
init_fidelity (else leaves it maximally mixed) and erases coherences;
memory decay pulls the nuclear state toward the unpolarized mixture with
factor exp(-dt/T1_nuc) * exp(-n_lasers t_laser / T1_nuc_laser).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .pulse_gates import (
    PulseKind,
    PulseSpec,
    cenotn_propagator,
    cnnote_propagator,
    finite_duration_propagator,
    strong_mw_propagator,
)
from .signal_model import SignalRealization
from .spin_system import TWO_PI, SpinSystemParams, mw_transition_frequency

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10


class Protocol(Enum):
    MCS = "mcs"
    CS = "cs"
    QDYNE = "qdyne"


@dataclass(frozen=True)
class ProtocolConfig:
    """Timing and resource parameters of one protocol run.

    M counts phase acquisitions after the stored one, N is the number of
    runs or ensemble sensors, T the inter-acquisition period, T_init the
    duration of the storage block (steps I+II). An optional t_wait stretches
    the period and adds free decay. Times in seconds.
    """

    protocol: Protocol = Protocol.MCS
    M: int = 1991
    N: int = 1
    T: float = 15.063e-6
    T_init: float = 101.57e-6
    t_dd: float = 4e-6
    t_laser: float = 200e-9
    T1_nuc: float = 0.7
    T1_nuc_laser: float = 210e-6
    init_fidelity: float = 1.0
    t_wait: float = 0.0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if self.T < self.t_dd:
            raise ValueError("period T cannot be shorter than the DD block t_dd")
        for name in ("T", "T_init", "t_dd", "t_laser", "t_wait"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.T1_nuc > 0 and self.T1_nuc_laser > 0):
            raise ValueError("relaxation times must be positive")
        if not 0.0 <= self.init_fidelity <= 1.0:
            raise ValueError("init_fidelity must lie in [0, 1]")

    @property
    def period(self) -> float:
        return self.T + self.t_wait


@dataclass(frozen=True)
class PopulationRecord:
    """One acquisition: index k, sensor |0>e population, nuclear polarization."""

    k: int
    p0_e: float
    memory_polarization: float

    def __post_init__(self):
        if not -1e-9 <= self.p0_e <= 1.0 + 1e-9:
            raise ValueError(f"p0_e out of range: {self.p0_e}")
        if abs(self.memory_polarization) > 1.0 + 1e-9:
            raise ValueError(
                f"memory polarization out of range: {self.memory_polarization}"
            )
        object.__setattr__(self, "p0_e", float(min(max(self.p0_e, 0.0), 1.0)))
        object.__setattr__(
            self,
            "memory_polarization",
            float(min(max(self.memory_polarization, -1.0), 1.0)),
        )


def check_density_matrix(rho: np.ndarray, where: str = "", eigs: bool = True) -> None:
    """Hermiticity / unit trace / positivity check; raises ValueError."""
    label = f" ({where})" if where else ""
    dev_h = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))))
    if dev_h > HERMITICITY_TOL:
        raise ValueError(f"density matrix not Hermitian{label}: deviation {dev_h:.3e}")
    dev_t = np.max(np.abs(np.einsum("...ii->...", rho) - 1.0))
    if dev_t > TRACE_TOL:
        raise ValueError(f"density matrix trace off unity{label}: deviation {dev_t:.3e}")
    if eigs:
        lo = np.min(np.linalg.eigvalsh(rho))
        if lo < EIGENVALUE_FLOOR:
            raise ValueError(f"density matrix not positive{label}: min eigenvalue {lo:.3e}")


@dataclass(frozen=True)
class DensityMatrix4:
    """Validated 4x4 state in the working basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("DensityMatrix4 requires a 4x4 matrix")
        check_density_matrix(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def p0_e(self) -> float:
        return float(np.real(self.matrix[0, 0] + self.matrix[1, 1]))

    @property
    def memory_polarization(self) -> float:
        return float(nuclear_polarization(self.matrix))


def ground_state() -> np.ndarray:
    """|0>e|0>n projector, the nominal post-initialization state."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def sensor_p0(rho: np.ndarray) -> np.ndarray:
    """Population of |0>e (both nuclear sectors)."""
    return np.real(rho[..., 0, 0] + rho[..., 1, 1])


def nuclear_polarization(rho: np.ndarray) -> np.ndarray:
    """Signed memory population difference p(|+1>n) - p(|0>n)."""
    d = np.real(np.einsum("...ii->...i", rho))
    return (d[..., 1] + d[..., 3]) - (d[..., 0] + d[..., 2])


# --- gates -------------------------------------------------------------------

@dataclass(frozen=True)
class GateSet:
    """The five propagators every pipeline is built from."""

    pi2_x: np.ndarray
    pi2_y: np.ndarray
    pi2_my: np.ndarray
    cnnote: np.ndarray
    cenotn: np.ndarray


def build_gates(
    params: SpinSystemParams | None = None,
    mode: str = "ideal",
    selective_rabi: float | None = None,
    strong_rabi: float | None = None,
) -> GateSet:
    """Ideal closed-form gates, or finite-duration ones integrated from the
    rotating-frame Hamiltonian (selective pulses default to rabi = |A_par|/100,
    slow enough to keep leakage into the detuned pair around 1e-4)."""
    if mode == "ideal":
        return GateSet(
            pi2_x=strong_mw_propagator(math.pi / 2, 0.0),
            pi2_y=strong_mw_propagator(math.pi / 2, math.pi / 2),
            pi2_my=strong_mw_propagator(math.pi / 2, -math.pi / 2),
            cnnote=cnnote_propagator(),
            cenotn=cenotn_propagator(),
        )
    if mode != "physical":
        raise ValueError(f"unknown gate mode {mode!r}")
    params = params if params is not None else SpinSystemParams()
    a = abs(params.A_par)
    sel = selective_rabi if selective_rabi is not None else a / 100.0
    strong = strong_rabi if strong_rabi is not None else TWO_PI * 20e6

    def u(kind, area, phase=0.0, rabi=strong):
        return finite_duration_propagator(
            PulseSpec(kind=kind, rabi=rabi, area=area, phase=phase), params
        )

    return GateSet(
        pi2_x=u(PulseKind.STRONG_MW, math.pi / 2, 0.0),
        pi2_y=u(PulseKind.STRONG_MW, math.pi / 2, math.pi / 2),
        pi2_my=u(PulseKind.STRONG_MW, math.pi / 2, -math.pi / 2),
        cnnote=u(PulseKind.SELECTIVE_MW_CNNOTE, math.pi, 0.0, rabi=sel),
        cenotn=u(PulseKind.SELECTIVE_RF_CENOTN, math.pi, 0.0, rabi=sel),
    )


def _apply(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def _inject(rho: np.ndarray, phi) -> np.ndarray:
    """Signal phase pickup diag(1, 1, e^{i phi}, e^{i phi}), batched over phi."""
    ph = np.exp(1j * np.asarray(phi, dtype=float))
    d = np.ones(ph.shape + (4,), dtype=complex)
    d[..., 2] = ph
    d[..., 3] = ph
    return d[..., :, None] * rho * d.conj()[..., None, :]


# --- channels ----------------------------------------------------------------

def decay_factor(cfg: ProtocolConfig, dt_free: float, n_lasers) -> float:
    """Polarization survival exp(-dt/T1_nuc) exp(-n t_laser/T1_nuc_laser)."""
    return np.exp(-np.asarray(dt_free) / cfg.T1_nuc) * np.exp(
        -np.asarray(n_lasers) * cfg.t_laser / cfg.T1_nuc_laser
    )


def _nuclear_depolarize(rho: np.ndarray, f) -> np.ndarray:
    """rho -> f rho + (1-f) Tr_n(rho) (x) 1_n/2, batched; f scalar or batch."""
    shape = rho.shape
    r5 = rho.reshape(shape[:-2] + (2, 2, 2, 2))  # axes (..., e, n, e', n')
    tr_e = np.einsum("...anbn->...ab", r5)
    fa = np.asarray(f)
    mixed = 0.5 * np.eye(2).reshape((1,) * (r5.ndim - 4) + (1, 2, 1, 2))
    out = fa[..., None, None, None, None] * r5 + (
        (1.0 - fa)[..., None, None, None, None]
        * tr_e[..., :, None, :, None]
        * mixed
    )
    return out.reshape(shape)


def memory_decay_channel(rho, dt_free: float, n_lasers: int, cfg: ProtocolConfig):
    """Nuclear depolarization over a free interval plus n laser events.

    Accepts a raw (..., 4, 4) array or a DensityMatrix4 and returns the same
    kind. dt = 0 with no lasers is the identity.
    """
    if dt_free < 0:
        raise ValueError("dt_free must be non-negative")
    if n_lasers < 0:
        raise ValueError("n_lasers must be non-negative")
    wrap = isinstance(rho, DensityMatrix4)
    mat = rho.matrix if wrap else np.asarray(rho, dtype=complex)
    out = _nuclear_depolarize(mat, decay_factor(cfg, dt_free, n_lasers))
    return DensityMatrix4(out) if wrap else out


def electron_reinit_channel(rho, fidelity: float):
    """Laser repump of the sensor: -> |0>e with probability fidelity, else the
    maximally mixed electron state; nuclear populations untouched, every
    coherence erased (the optical cycle destroys phase information)."""
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError("fidelity must lie in [0, 1]")
    wrap = isinstance(rho, DensityMatrix4)
    mat = rho.matrix if wrap else np.asarray(rho, dtype=complex)
    pops = np.real(np.einsum("...ii->...i", mat))
    n0 = pops[..., 0] + pops[..., 2]
    n1 = pops[..., 1] + pops[..., 3]
    hi = 0.5 * (1.0 + fidelity)
    lo = 0.5 * (1.0 - fidelity)
    out = np.zeros_like(mat)
    idx = np.arange(4)
    out[..., idx, idx] = np.stack([hi * n0, hi * n1, lo * n0, lo * n1], axis=-1)
    return DensityMatrix4(out) if wrap else out


# --- initialization ----------------------------------------------------------

@dataclass(frozen=True)
class InitReport:
    """Population ledger of the four-step nuclear initialization.

    Tables are 2x3 arrays, rows m_s = (0, -1), columns m_I = (+1, 0, -1);
    they track the full six-level manifold. subspace_weight is the total
    population inside the four-level working basis (m_I = -1 is outside it).
    """

    steps: dict
    p_n0_after_step3: float
    subspace_weight: float


def initialize_system(
    params: SpinSystemParams,
    init_fidelity: float,
    initial_nuclear_populations: Sequence[float],
) -> tuple[DensityMatrix4, InitReport]:
    """Four-step initialization: thermal start, CnNOTe on the m_I=+1 pair,
    CeNOTn inside m_s=-1, electron repump. Returns the working-basis state
    (renormalized; the m_I=-1 leakage weight is reported, not simulated) and
    the per-step population ledger.
    """
    p = np.asarray(initial_nuclear_populations, dtype=float)
    if p.shape != (3,):
        raise ValueError("need three nuclear populations for m_I = (+1, 0, -1)")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("nuclear populations must be a probability simplex")
    if not 0.0 <= init_fidelity <= 1.0:
        raise ValueError("init_fidelity must lie in [0, 1]")

    start = np.zeros((2, 3))
    start[0] = p  # optically pumped electron in m_s = 0

    # Step 2: CnNOTe swaps the electron inside the m_I=+1 column
    after_cnnote = start.copy()
    after_cnnote[0, 0], after_cnnote[1, 0] = start[1, 0], start[0, 0]

    # Step 3: CeNOTn swaps m_I=+1 <-> m_I=0 inside the m_s=-1 row
    after_cenotn = after_cnnote.copy()
    after_cenotn[1, 0], after_cenotn[1, 1] = after_cnnote[1, 1], after_cnnote[1, 0]
    p_n0 = float(after_cenotn[:, 1].sum())

    # Step 4: electron repump with the given fidelity, columnwise
    totals = after_cenotn.sum(axis=0)
    after_repump = np.vstack(
        [0.5 * (1.0 + init_fidelity) * totals, 0.5 * (1.0 - init_fidelity) * totals]
    )

    # working basis keeps m_I in {0, +1}
    w = float(after_repump[:, :2].sum())
    if w <= 0:
        raise ValueError("no population left in the working basis")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = after_repump[0, 1] / w  # |0>e|0>n
    rho[1, 1] = after_repump[0, 0] / w  # |0>e|+1>n
    rho[2, 2] = after_repump[1, 1] / w  # |-1>e|0>n
    rho[3, 3] = after_repump[1, 0] / w  # |-1>e|+1>n

    report = InitReport(
        steps={
            "start": start,
            "after_cnnote": after_cnnote,
            "after_cenotn": after_cenotn,
            "after_repump": after_repump,
        },
        p_n0_after_step3=p_n0,
        subspace_weight=w,
    )
    return DensityMatrix4(rho), report


# --- phase bookkeeping ---------------------------------------------------------

def _phase_amplitude(params: SpinSystemParams, b_fields, t_dd: float) -> np.ndarray:
    # same expression as pulse_gates.xy8_phase at cos(xi) = 1
    return (2.0 / math.pi) * params.gamma_NV * np.asarray(b_fields, dtype=float) * t_dd


def _phase_matrix(
    params: SpinSystemParams,
    cfg: ProtocolConfig,
    b_fields: np.ndarray,
    xi0s: np.ndarray,
    nu_s: float,
    times: np.ndarray,
) -> np.ndarray:
    """phi[j, k] = (2/pi) gamma_NV B_j t_dd cos(xi0_j + 2 pi nu_s t_k)."""
    amp = _phase_amplitude(params, b_fields, cfg.t_dd)
    return amp[:, None] * np.cos(xi0s[:, None] + TWO_PI * nu_s * times[None, :])


def _unpack(realizations: Sequence[SignalRealization]):
    b = np.array([r.B for r in realizations], dtype=float)
    xi = np.array([r.xi0 for r in realizations], dtype=float)
    return b, xi


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix4):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


# --- MCS -----------------------------------------------------------------------

def mcs_population_batch(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    b_fields,
    xi0s,
    nu_s: float,
    mode: str = "ideal",
    rho0: np.ndarray | None = None,
    gates: GateSet | None = None,
    validate: bool = True,
):
    """Vectorized MCS over independent runs.

    Returns (p0, mpol), each of shape (n_runs, M): the |0>e population at
    every record and the nuclear polarization right after it. One laser
    event per cycle enters the decay channel.
    """
    b = np.atleast_1d(np.asarray(b_fields, dtype=float))
    xi = np.atleast_1d(np.asarray(xi0s, dtype=float))
    if b.shape != xi.shape:
        raise ValueError("b_fields and xi0s must have matching shapes")
    n_runs = b.size
    g = gates if gates is not None else build_gates(params, mode)

    times = cfg.period * np.arange(cfg.M + 1)  # index 0 is the stored phase
    phi = _phase_matrix(params, cfg, b, xi, nu_s, times)

    base = ground_state() if rho0 is None else _as_matrix(rho0)
    rho = np.broadcast_to(base, (n_runs, 4, 4)).copy()

    # storage block: write sin(phi_0) onto the nuclear population difference
    rho = _apply(rho, g.pi2_x)
    rho = _inject(rho, phi[:, 0])
    rho = _apply(rho, g.pi2_y)
    rho = _apply(rho, g.cenotn)
    if validate:
        check_density_matrix(rho, "after storage")

    f_cycle = float(decay_factor(cfg, cfg.period, 1))
    p0 = np.empty((n_runs, cfg.M))
    mpol = np.empty((n_runs, cfg.M))
    for k in range(1, cfg.M + 1):
        rho = _nuclear_depolarize(rho, f_cycle)
        rho = electron_reinit_channel(rho, cfg.init_fidelity)
        rho = _apply(rho, g.pi2_x)
        rho = _inject(rho, phi[:, k])
        rho = _apply(rho, g.pi2_y)
        rho = _apply(rho, g.cnnote)
        p0[:, k - 1] = sensor_p0(rho)
        mpol[:, k - 1] = nuclear_polarization(rho)
        if validate:
            check_density_matrix(rho, f"cycle {k}", eigs=(k == 1 or k == cfg.M))
    return np.clip(p0, 0.0, 1.0), np.clip(mpol, -1.0, 1.0)


def mcs_run(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    realization: SignalRealization,
    nu_s: float,
    mode: str = "ideal",
    rho0: np.ndarray | None = None,
) -> list[PopulationRecord]:
    """One MCS run: M records correlating the stored phi_0 with each phi_k."""
    p0, mpol = mcs_population_batch(
        cfg, params, [realization.B], [realization.xi0], nu_s, mode, rho0=rho0
    )
    return [
        PopulationRecord(k + 1, p0[0, k], mpol[0, k]) for k in range(cfg.M)
    ]


def mcs_step_states(
    params: SpinSystemParams,
    phi_0: float,
    phi_k: float,
    init_fidelity: float = 1.0,
    rho0: np.ndarray | None = None,
    mode: str = "ideal",
) -> dict:
    """Every intermediate state of a single decay-free MCS storage + read
    pass at fixed phases, keyed by pipeline position. Used to pin the gate
    algebra down element by element."""
    g = build_gates(params, mode)
    rho = (ground_state() if rho0 is None else _as_matrix(rho0)).copy()
    out = {"init": rho.copy()}
    rho = _apply(rho, g.pi2_x)
    out["store_pi2_x"] = rho.copy()
    rho = _inject(rho, phi_0)
    out["store_phase"] = rho.copy()
    rho = _apply(rho, g.pi2_y)
    out["store_pi2_y"] = rho.copy()
    rho = _apply(rho, g.cenotn)
    out["store_cenotn"] = rho.copy()
    rho = electron_reinit_channel(rho, init_fidelity)
    out["reinit"] = rho.copy()
    rho = _apply(rho, g.pi2_x)
    out["read_pi2_x"] = rho.copy()
    rho = _inject(rho, phi_k)
    out["read_phase"] = rho.copy()
    rho = _apply(rho, g.pi2_y)
    out["read_pi2_y"] = rho.copy()
    rho = _apply(rho, g.cnnote)
    out["read_cnnote"] = rho.copy()
    for name, state in out.items():
        check_density_matrix(state, name)
    return out


# --- CS ------------------------------------------------------------------------

def cs_population_batch(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    b_fields,
    xi0s,
    ks,
    nu_s: float,
    mode: str = "ideal",
    rho0: np.ndarray | None = None,
    gates: GateSet | None = None,
):
    """Vectorized CS records: element i correlates phi_0 (at its xi0) with
    phi at delay ks[i] * period, free nuclear decay only during the idle."""
    b = np.atleast_1d(np.asarray(b_fields, dtype=float))
    xi = np.atleast_1d(np.asarray(xi0s, dtype=float))
    k_arr = np.atleast_1d(np.asarray(ks, dtype=int))
    if not (b.shape == xi.shape == k_arr.shape):
        raise ValueError("b_fields, xi0s and ks must have matching shapes")
    if np.any(k_arr < 1) or np.any(k_arr > cfg.M):
        raise ValueError("k must lie in 1..M")
    g = gates if gates is not None else build_gates(params, mode)

    amp = _phase_amplitude(params, b, cfg.t_dd)
    phi_0 = amp * np.cos(xi)
    phi_k = amp * np.cos(xi + TWO_PI * nu_s * k_arr * cfg.period)

    base = ground_state() if rho0 is None else _as_matrix(rho0)
    rho = np.broadcast_to(base, (b.size, 4, 4)).copy()
    rho = _apply(rho, g.pi2_x)
    rho = _inject(rho, phi_0)
    rho = _apply(rho, g.pi2_y)
    rho = _apply(rho, g.cenotn)
    rho = electron_reinit_channel(rho, cfg.init_fidelity)
    rho = _nuclear_depolarize(rho, np.exp(-k_arr * cfg.period / cfg.T1_nuc))
    rho = _apply(rho, g.pi2_x)
    rho = _inject(rho, phi_k)
    rho = _apply(rho, g.pi2_y)
    rho = _apply(rho, g.cnnote)
    check_density_matrix(rho, "cs record")
    return np.clip(sensor_p0(rho), 0.0, 1.0), np.clip(
        nuclear_polarization(rho), -1.0, 1.0
    )


def cs_run(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    realization: SignalRealization,
    k: int,
    nu_s: float,
    mode: str = "ideal",
    rho0: np.ndarray | None = None,
) -> PopulationRecord:
    """One CS sweep point: store phi_0, idle k*T, read phi_k."""
    p0, mpol = cs_population_batch(
        cfg, params, [realization.B], [realization.xi0], [k], nu_s, mode, rho0=rho0
    )
    return PopulationRecord(int(k), p0[0], mpol[0])


def cs_wall_time(cfg: ProtocolConfig, k: int) -> float:
    """Wall time of the sweep point k: one init plus the k*T idle."""
    return cfg.T_init + k * cfg.period


def mcs_wall_time(cfg: ProtocolConfig) -> float:
    """Wall time of a full MCS run: one init plus M periods."""
    return cfg.T_init + cfg.M * cfg.period


# --- QDyne ----------------------------------------------------------------------

def qdyne_population_batch(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    b_fields,
    xi0s,
    nu_s: float,
    mode: str = "ideal",
    gates: GateSet | None = None,
):
    """Memory-free sampling: p0_e[k] = (1 + sin(mean_j phi_k^(j))) / 2.

    The per-sensor phases of the N-sensor ensemble are averaged before the
    sine because simultaneous optical readout adds photon numbers, i.e. it
    averages the linear-response phase, not the per-sensor populations.
    """
    b = np.atleast_1d(np.asarray(b_fields, dtype=float))
    xi = np.atleast_1d(np.asarray(xi0s, dtype=float))
    if b.shape != xi.shape:
        raise ValueError("b_fields and xi0s must have matching shapes")
    g = gates if gates is not None else build_gates(params, mode)

    times = cfg.period * np.arange(1, cfg.M + 1)
    phi_bar = _phase_matrix(params, cfg, b, xi, nu_s, times).mean(axis=0)

    rho = np.broadcast_to(ground_state(), (cfg.M, 4, 4)).copy()
    rho = electron_reinit_channel(rho, cfg.init_fidelity)
    rho = _apply(rho, g.pi2_x)
    rho = _inject(rho, phi_bar)
    rho = _apply(rho, g.pi2_my)
    check_density_matrix(rho, "qdyne records")
    return np.clip(sensor_p0(rho), 0.0, 1.0), np.clip(
        nuclear_polarization(rho), -1.0, 1.0
    )


def qdyne_run(
    cfg: ProtocolConfig,
    params: SpinSystemParams,
    realizations: Sequence[SignalRealization],
    nu_s: float,
    mode: str = "ideal",
) -> list[PopulationRecord]:
    """M ensemble records at times k*T, no memory qubit involved."""
    b, xi = _unpack(realizations)
    p0, mpol = qdyne_population_batch(cfg, params, b, xi, nu_s, mode)
    return [PopulationRecord(k + 1, p0[k], mpol[k]) for k in range(cfg.M)]


# --- ODMR -----------------------------------------------------------------------

def simulate_odmr(
    params: SpinSystemParams,
    nuclear_populations: Sequence[float],
    contrast: float,
    linewidth: float,
    freq_grid: np.ndarray,
) -> np.ndarray:
    """Pulsed-ODMR spectrum: unit baseline minus one Gaussian dip per
    hyperfine transition, dip areas proportional to the nuclear populations.

    freq_grid and linewidth (Gaussian sigma) are in MHz; populations are
    ordered m_I = (+1, 0, -1).
    """
    p = np.asarray(nuclear_populations, dtype=float)
    if p.shape != (3,):
        raise ValueError("need three nuclear populations for m_I = (+1, 0, -1)")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("nuclear populations must be a probability simplex")
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    f = np.asarray(freq_grid, dtype=float)
    dips = np.zeros_like(f)
    for weight, m_i in zip(p, (1, 0, -1)):
        center = mw_transition_frequency(params, m_i) / TWO_PI / 1e6
        dips += weight * np.exp(-0.5 * ((f - center) / linewidth) ** 2)
    return 1.0 - contrast * dips
