"""Simulation and analysis toolkit for memory-assisted NV magnetometry.

The package models a single NV electron spin coupled to its intrinsic 14N
nuclear spin used as a quantum memory, and compares three ways of tracking
a weak oscillating field: memory-assisted correlation sampling (MCS), plain
correlation spectroscopy (CS) and direct synchronized sampling (QDyne).
"""

from .analysis import (
    BesselFit,
    FitFailure,
    PowerSpectrum,
    SpectrumFit,
    TimeFit,
    TripleGaussianFit,
    fit_bessel_j0,
    fit_decaying_sinusoid,
    fit_lorentzian,
    fit_triple_gaussian,
    periodogram,
    psd,
    sensitivity,
)
from .cli import (
    CompareResult,
    ScenarioResult,
    compare_protocols,
    metrics_table,
    reanalyze_trace,
    run_scenario,
)
from .config import SCHEMA_VERSION, ConfigError, ScenarioConfig, load_config, save_config
from .metrics import (
    AdvantageFactor,
    ComparisonInputs,
    cramer_rao_precision,
    effective_memory_lifetime,
    ensemble_scaling,
    f_T,
    fisher_cs,
    fisher_qdyne,
    lifetime_vs_field,
    total_time_cs,
    total_time_mcs,
)
from .protocol_engine import (
    DensityMatrix4,
    InitReport,
    PopulationRecord,
    Protocol,
    ProtocolConfig,
    build_gates,
    cs_run,
    cs_wall_time,
    electron_reinit_channel,
    initialize_system,
    mcs_run,
    mcs_wall_time,
    memory_decay_channel,
    qdyne_run,
    simulate_odmr,
)
from .pulse_gates import (
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
from .readout_model import (
    NoiseMode,
    ReadoutParams,
    TimeTrace,
    aggregate_trace,
    readout,
    readout_counts,
)
from .signal_model import (
    SignalConfig,
    SignalMode,
    SignalRealization,
    correlation_classical_exact,
    correlation_exact,
    correlation_statistical_exact,
    draw_realization,
    draw_realizations,
    third_order_correlation,
    undersampled_frequency,
)
from .spin_system import (
    BASIS_LABELS,
    BasisState,
    EnergyTable,
    SpinSystemParams,
    energy_levels,
    mw_transition_frequency,
    rf_transition_frequency,
)

__version__ = "0.1.0"
