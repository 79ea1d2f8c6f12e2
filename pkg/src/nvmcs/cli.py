"""Command line front end.

Subcommands:
  run      simulate one scenario, write trace / spectrum / fits / summary
  compare  SNR against ensemble size for all three protocols
  fit      re-analyze a previously written trace CSV
  tables   closed-form figures of merit for a scenario

Determinism contract: every stochastic draw comes from a stream keyed by
(master_seed, purpose, indices), so results are byte-identical for a given
seed and config regardless of worker count or scheduling.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import metrics
from .analysis import (
    FitFailure,
    PowerSpectrum,
    fit_decaying_sinusoid,
    fit_lorentzian,
    psd,
    sensitivity,
)
from .config import SCHEMA_VERSION, ConfigError, ScenarioConfig, load_config, save_config
from .protocol_engine import (
    ProtocolConfig,
    build_gates,
    cs_population_batch,
    mcs_population_batch,
    mcs_wall_time,
    qdyne_population_batch,
)
from .readout_model import NoiseMode, ReadoutParams, TimeTrace, aggregate_trace
from .signal_model import draw_realizations, undersampled_frequency

# rng stream namespaces under the master seed
_STREAM_RUN = 0
_STREAM_READOUT = 1
_STREAM_COMPARE = 2

_PROTO_ORDER = ("mcs", "cs", "qdyne")

# cap on simultaneous 4x4 pipelines, keeps the CS sweep memory bounded
_MAX_BATCH_ROWS = 200_000


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key))
    )


# --- single-scenario simulation ---------------------------------------------------


def _draw_run_fields(cfg: ScenarioConfig, run_indices) -> tuple[np.ndarray, np.ndarray]:
    """Per-run, per-sensor field amplitudes and initial phases, shape (R, S)."""
    sig = cfg.build_signal_config()
    b = np.empty((len(run_indices), sig.n_sensors))
    xi = np.empty_like(b)
    for row, run_idx in enumerate(run_indices):
        rng = _rng(cfg.master_seed, _STREAM_RUN, run_idx)
        reals = draw_realizations(sig, rng)
        b[row] = [r.B for r in reals]
        xi[row] = [r.xi0 for r in reals]
    return b, xi


def _scenario_p0(cfg: ScenarioConfig, run_indices) -> np.ndarray:
    """p0_e records for a block of runs.

    MCS/CS return one row per (run, sensor); QDyne returns one row per run
    because its ensemble average happens before the sine nonlinearity.
    """
    params = cfg.build_spin_params()
    pcfg = cfg.build_protocol_config()
    sig = cfg.build_signal_config()
    nu_s = sig.nu_s
    gates = build_gates(params, cfg.mode)
    b, xi = _draw_run_fields(cfg, run_indices)

    if cfg.protocol == "mcs":
        p0, _ = mcs_population_batch(
            pcfg, params, b.ravel(), xi.ravel(), nu_s, cfg.mode, gates=gates
        )
        return p0

    if cfg.protocol == "cs":
        rows = b.size
        ks = np.arange(1, pcfg.M + 1)
        out = np.empty((rows, pcfg.M))
        block = max(1, _MAX_BATCH_ROWS // pcfg.M)
        bf, xf = b.ravel(), xi.ravel()
        for start in range(0, rows, block):
            stop = min(start + block, rows)
            n = stop - start
            p0, _ = cs_population_batch(
                pcfg,
                params,
                np.repeat(bf[start:stop], pcfg.M),
                np.repeat(xf[start:stop], pcfg.M),
                np.tile(ks, n),
                nu_s,
                cfg.mode,
                gates=gates,
            )
            out[start:stop] = p0.reshape(n, pcfg.M)
        return out

    if cfg.protocol == "qdyne":
        out = np.empty((len(run_indices), pcfg.M))
        for row in range(len(run_indices)):
            p0, _ = qdyne_population_batch(
                pcfg, params, b[row], xi[row], nu_s, cfg.mode, gates=gates
            )
            out[row] = p0
        return out

    raise ConfigError(f"unknown protocol {cfg.protocol!r}")


def _scenario_chunk(args) -> np.ndarray:
    cfg, run_indices = args
    return _scenario_p0(cfg, run_indices)


def _ensemble_readout_params(cfg: ScenarioConfig) -> ReadoutParams:
    """Readout parameters for QDyne-style summed ensemble detection.

    N sensors read out together multiply both photon rates by N; the binary
    projection stage has no meaning for a summed ensemble, so any stochastic
    mode becomes averaged Poisson counting once N > 1.
    """
    rparams = cfg.build_readout_params()
    n = cfg.n_sensors
    if n == 1:
        return rparams
    mode = (
        NoiseMode.NOISELESS
        if rparams.noise_mode is NoiseMode.NOISELESS
        else NoiseMode.AVERAGED_POISSON
    )
    return ReadoutParams(eta0=n * rparams.eta0, eta1=n * rparams.eta1, noise_mode=mode)


def _wall_times(cfg: ScenarioConfig, pcfg: ProtocolConfig) -> dict:
    period = pcfg.period
    if cfg.protocol == "mcs":
        per_run = mcs_wall_time(pcfg)
    elif cfg.protocol == "cs":
        # every sweep point pays its own initialization plus the k*T idle
        per_run = pcfg.M * pcfg.T_init + period * pcfg.M * (pcfg.M + 1) / 2.0
    else:
        per_run = pcfg.M * period
    return {
        "per_run_seconds": per_run,
        "total_seconds": per_run * cfg.n_runs,
    }


def _noise_floor_std(spectrum: PowerSpectrum, center_hz: float, guard_bins: int = 10) -> float:
    f = spectrum.frequencies
    mask = np.abs(f - center_hz) > guard_bins * spectrum.bin_width
    mask[:3] = False  # mean subtraction leaves DC leakage behind
    if not np.any(mask):
        raise ValueError("no bins left for the noise floor")
    return float(np.std(spectrum.power[mask]))


def _analyze_trace(trace: TimeTrace, pad_factor: int, window: str):
    spectrum = psd(trace, pad_factor, window)
    fits: dict = {}
    lor = sinus = None
    try:
        lor = fit_lorentzian(spectrum)
        fits["lorentzian"] = lor.to_dict()
    except (FitFailure, ValueError) as exc:
        fits["lorentzian"] = {"error": str(exc)}
    try:
        sinus = fit_decaying_sinusoid(trace)
        fits["decaying_sinusoid"] = sinus.to_dict()
    except (FitFailure, ValueError) as exc:
        fits["decaying_sinusoid"] = {"error": str(exc)}
    return spectrum, lor, sinus, fits


def _write_psd_csv(spectrum: PowerSpectrum, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency_hz", "power"])
        for f, p in zip(spectrum.frequencies, spectrum.power):
            w.writerow([f"{f:.12e}", f"{p:.12e}"])
    return path


def _write_json(data: dict, path: Path) -> Path:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


@dataclass(frozen=True)
class ScenarioResult:
    out_dir: Path
    trace: TimeTrace
    spectrum: PowerSpectrum
    fits: dict
    summary: dict
    paths: dict


def run_scenario(
    cfg: ScenarioConfig, workers: int = 1, out_dir=None
) -> ScenarioResult:
    """Simulate one scenario end to end and write the artifact bundle."""
    cfg = cfg.validate()
    params = cfg.build_spin_params()
    pcfg = cfg.build_protocol_config()
    sig = cfg.build_signal_config()
    rparams = cfg.build_readout_params()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    workers = max(1, int(workers))
    indices = list(range(cfg.n_runs))
    n_chunks = min(workers, len(indices))
    chunks = [list(c) for c in np.array_split(indices, n_chunks)]
    if n_chunks == 1:
        blocks = [_scenario_p0(cfg, chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=n_chunks) as pool:
            blocks = list(pool.map(_scenario_chunk, [(cfg, c) for c in chunks]))
    p0_all = np.concatenate(blocks, axis=0)

    if cfg.protocol == "qdyne":
        trace_params = _ensemble_readout_params(cfg)
    else:
        trace_params = rparams
    readout_rng = _rng(cfg.master_seed, _STREAM_READOUT)
    f_u = undersampled_frequency(sig.nu_s, pcfg.period)
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "master_seed": cfg.master_seed,
        "protocol": cfg.protocol,
        "mode": cfg.mode,
        "noise": cfg.noise,
        "n_runs": cfg.n_runs,
        "n_sensors": cfg.n_sensors,
        "expected_alias_hz": f_u,
        "config": cfg.to_dict(),
    }
    trace = aggregate_trace(p0_all, trace_params, readout_rng, pcfg.period, metadata)

    spectrum, lor, sinus, fits = _analyze_trace(trace, cfg.pad_factor, cfg.window)

    walls = _wall_times(cfg, pcfg)
    adv = metrics.f_T(pcfg.M, pcfg.period, pcfg.T_init)
    m_limit = pcfg.T1_nuc_laser / pcfg.t_laser
    lifetime = metrics.effective_memory_lifetime(pcfg.T1_nuc, m_limit, pcfg.period)

    sens = None
    if lor is not None:
        try:
            floor = _noise_floor_std(spectrum, lor.center)
            sens = sensitivity(lor, floor, cfg.b_amp_gauss * 1e-4, walls["total_seconds"])
        except (ValueError, ZeroDivisionError):
            sens = None

    summary = {
        "schema_version": SCHEMA_VERSION,
        "master_seed": cfg.master_seed,
        "protocol": cfg.protocol,
        "mode": cfg.mode,
        "noise": cfg.noise,
        "signal_mode": cfg.signal_mode,
        "n_runs": cfg.n_runs,
        "n_sensors": cfg.n_sensors,
        "records": pcfg.M,
        "period_seconds": pcfg.period,
        "expected_alias_hz": f_u,
        "psd_peak_hz": spectrum.peak_frequency(f_min=0.5 * spectrum.bin_width),
        "lorentzian_center_hz": None if lor is None else lor.center,
        "fwhm_hz": None if lor is None else lor.fwhm,
        "tau_decay_seconds": None if sinus is None else sinus.tau_decay,
        "fit_frequency_hz": None if sinus is None else sinus.frequency,
        "sensitivity_t_per_sqrt_hz": sens,
        "effective_memory_lifetime_seconds": lifetime,
        "advantage_factor": adv.f_t,
        "advantage_time_ratio": adv.time_ratio,
        "wall_time": walls,
        "counts_total": float(np.sum(trace.counts)),
    }

    paths = {
        "config": save_config(cfg, out / "config_used.yaml"),
        "trace_csv": trace.write_csv(out / "trace.csv"),
        "psd_csv": _write_psd_csv(spectrum, out / "psd.csv"),
        "fits_json": _write_json(fits, out / "fits.json"),
    }
    from . import plots

    paths["trace_png"] = plots.plot_trace(trace, out / "trace.png")
    paths["spectrum_png"] = plots.plot_spectrum(
        spectrum, out / "spectrum.png", fit=lor, marker_hz=f_u
    )
    summary["outputs"] = {k: str(v) for k, v in paths.items()}
    paths["summary_json"] = _write_json(summary, out / "summary.json")
    return ScenarioResult(out, trace, spectrum, fits, summary, paths)


# --- protocol comparison -----------------------------------------------------------


def _compare_cell(args) -> tuple[str, int, dict]:
    """Averaged-spectrum SNR for one (protocol, ensemble size) grid point.

    Each repetition co-adds cfg.n_runs independent experiment repetitions
    into one counts trace before the spectrum is taken. The statistical
    signal redraws between repetitions, so only protocols whose tone phase
    is pinned by the stored reference (MCS, CS) co-add coherently; the
    direct-sampling tone carries the random signal phase and adds as a
    random walk. That asymmetry is the effect under test, not an estimator
    artifact.
    """
    cfg, proto, n_sensors, reps = args
    proto_idx = _PROTO_ORDER.index(proto)
    cell_cfg = replace(cfg, protocol=proto, n_sensors=n_sensors)
    params = cell_cfg.build_spin_params()
    pcfg = cell_cfg.build_protocol_config()
    sig = cell_cfg.build_signal_config()
    if proto == "qdyne":
        # hold the detection chain fixed across the whole grid: summed
        # ensemble counting at every N, so the fitted slope reflects the
        # protocol and not a noise-model switch at N = 1
        base = cell_cfg.build_readout_params()
        mode = (
            NoiseMode.NOISELESS
            if base.noise_mode is NoiseMode.NOISELESS
            else NoiseMode.AVERAGED_POISSON
        )
        rparams = ReadoutParams(
            eta0=n_sensors * base.eta0, eta1=n_sensors * base.eta1, noise_mode=mode
        )
    else:
        rparams = cell_cfg.build_readout_params()
    gates = build_gates(params, cell_cfg.mode)
    ks = np.arange(1, pcfg.M + 1)
    n_runs = cfg.n_runs

    power_sum = None
    spectrum = None
    for rep in range(reps):
        rng = _rng(cfg.master_seed, _STREAM_COMPARE, proto_idx, n_sensors, rep, 0)
        b = np.empty((n_runs, n_sensors))
        xi = np.empty_like(b)
        for run in range(n_runs):
            reals = draw_realizations(sig, rng)
            b[run] = [r.B for r in reals]
            xi[run] = [r.xi0 for r in reals]
        if proto == "mcs":
            p0, _ = mcs_population_batch(
                pcfg, params, b.ravel(), xi.ravel(), sig.nu_s, cell_cfg.mode, gates=gates
            )
        elif proto == "cs":
            rows = b.size
            p0 = np.empty((rows, pcfg.M))
            block = max(1, _MAX_BATCH_ROWS // pcfg.M)
            bf, xf = b.ravel(), xi.ravel()
            for start in range(0, rows, block):
                stop = min(start + block, rows)
                n = stop - start
                part, _ = cs_population_batch(
                    pcfg,
                    params,
                    np.repeat(bf[start:stop], pcfg.M),
                    np.repeat(xf[start:stop], pcfg.M),
                    np.tile(ks, n),
                    sig.nu_s,
                    cell_cfg.mode,
                    gates=gates,
                )
                p0[start:stop] = part.reshape(n, pcfg.M)
        else:
            p0 = np.empty((n_runs, pcfg.M))
            for run in range(n_runs):
                p0[run], _ = qdyne_population_batch(
                    pcfg, params, b[run], xi[run], sig.nu_s, cell_cfg.mode, gates=gates
                )
        readout_rng = _rng(cfg.master_seed, _STREAM_COMPARE, proto_idx, n_sensors, rep, 1)
        trace = aggregate_trace(p0, rparams, readout_rng, pcfg.period)
        spectrum = psd(trace, cfg.pad_factor, cfg.window)
        power_sum = spectrum.power if power_sum is None else power_sum + spectrum.power

    power = power_sum / reps
    f_u = undersampled_frequency(sig.nu_s, pcfg.period)
    freqs = spectrum.frequencies
    peak_bin = int(np.argmin(np.abs(freqs - f_u)))
    lo, hi = max(0, peak_bin - 2), min(len(freqs), peak_bin + 3)
    peak = float(np.max(power[lo:hi]))
    mask = np.abs(np.arange(len(freqs)) - peak_bin) > 10
    mask[:3] = False
    floor = float(np.median(power[mask]))
    snr = math.sqrt(max(peak - floor, 0.0) / floor) if floor > 0 else float("inf")
    return proto, n_sensors, {
        "snr": snr,
        "peak_power": peak,
        "floor_power": floor,
        "alias_hz": f_u,
    }


@dataclass(frozen=True)
class CompareResult:
    rows: list
    slopes: dict
    paths: dict


def compare_protocols(
    cfg: ScenarioConfig,
    n_list,
    reps: int = 50,
    workers: int = 1,
    out_dir=None,
) -> CompareResult:
    """SNR against ensemble size for MCS, CS and QDyne on a common scenario.

    Per grid point, `reps` independent realizations are simulated and their
    spectra averaged; the SNR is the peak amplitude above the median floor at
    the known alias frequency. Log-log slopes are fitted when the grid has at
    least two sizes, and the memory protocols are expected near +1/2 against
    the flat direct-sampling ensemble.
    """
    cfg = cfg.validate()
    n_values = sorted({int(n) for n in n_list})
    if not n_values or n_values[0] < 1:
        raise ConfigError("N list must contain positive integers")
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tasks = [(cfg, proto, n, reps) for proto in _PROTO_ORDER for n in n_values]
    workers = max(1, int(workers))
    if workers == 1:
        results = [_compare_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_compare_cell, tasks))
    cells = {(proto, n): stats for proto, n, stats in results}

    inputs = metrics.ComparisonInputs(
        M=cfg.M,
        T=cfg.T_us * 1e-6 + cfg.t_wait_us * 1e-6,
        T_init=cfg.T_init_us * 1e-6,
        eta=cfg.build_readout_params().eta,
        c=cfg.build_readout_params().contrast,
        T1_nuc=cfg.T1_nuc_s,
        T1_nuc_laser=cfg.T1_nuc_laser_us * 1e-6,
        t_laser=cfg.t_laser_ns * 1e-9,
    )

    rows = []
    slopes: dict = {}
    table_for_plot: dict = {}
    for proto in _PROTO_ORDER:
        snrs = np.array([cells[(proto, n)]["snr"] for n in n_values])
        ratios = np.array(
            [metrics.ensemble_scaling(proto, n, inputs) for n in n_values]
        )
        anchor = snrs[0] if snrs[0] > 0 else 1.0
        predicted = anchor * np.sqrt(ratios / ratios[0])
        for n, snr, ratio, pred in zip(n_values, snrs, ratios, predicted):
            rows.append(
                {
                    "protocol": proto,
                    "N": n,
                    "snr": float(snr),
                    "fisher_ratio": float(ratio),
                    "predicted_snr": float(pred),
                }
            )
        if len(n_values) >= 2 and np.all(snrs > 0) and np.all(np.isfinite(snrs)):
            slopes[proto] = float(
                np.polyfit(np.log(n_values), np.log(snrs), 1)[0]
            )
        else:
            slopes[proto] = None
        table_for_plot[proto] = (n_values, snrs)

    paths = {}
    csv_path = out / "compare.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(
            fh, fieldnames=["protocol", "N", "snr", "fisher_ratio", "predicted_snr"]
        )
        w.writeheader()
        for row in rows:
            w.writerow(row)
    paths["compare_csv"] = csv_path
    payload = {
        "schema_version": SCHEMA_VERSION,
        "master_seed": cfg.master_seed,
        "reps": reps,
        "n_list": n_values,
        "rows": rows,
        "slopes": slopes,
    }
    paths["compare_json"] = _write_json(payload, out / "compare.json")
    from . import plots

    paths["scaling_png"] = plots.plot_scaling(table_for_plot, out / "scaling.png", slopes)
    return CompareResult(rows, slopes, paths)


# --- re-analysis and tables --------------------------------------------------------


def reanalyze_trace(trace_path, out_dir=None, pad_factor: int = 4, window: str = "rect") -> dict:
    """Fit an existing trace CSV; refuses traces from other schema versions."""
    trace = TimeTrace.read_csv(trace_path)
    version = trace.metadata.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"trace was written under schema_version {version!r}, "
            f"this build reads {SCHEMA_VERSION}"
        )
    out = Path(out_dir if out_dir is not None else Path(trace_path).parent)
    out.mkdir(parents=True, exist_ok=True)
    spectrum, lor, sinus, fits = _analyze_trace(trace, pad_factor, window)
    report = {
        "schema_version": SCHEMA_VERSION,
        "source": str(trace_path),
        "psd_peak_hz": spectrum.peak_frequency(f_min=0.5 * spectrum.bin_width),
        "expected_alias_hz": trace.metadata.get("expected_alias_hz"),
        "fits": fits,
    }
    _write_psd_csv(spectrum, out / "psd.csv")
    _write_json(report, out / "refit.json")
    from . import plots

    plots.plot_spectrum(
        spectrum,
        out / "spectrum.png",
        fit=lor,
        marker_hz=trace.metadata.get("expected_alias_hz"),
    )
    return report


def metrics_table(cfg: ScenarioConfig, n_list=(1, 4, 16, 64)) -> list[dict]:
    """Closed-form figures of merit for the scenario's timing parameters."""
    cfg = cfg.validate()
    pcfg = cfg.build_protocol_config()
    period = pcfg.period
    adv = metrics.f_T(pcfg.M, period, pcfg.T_init)
    m_limit = pcfg.T1_nuc_laser / pcfg.t_laser
    rows = [
        {"quantity": "records_M", "value": pcfg.M},
        {"quantity": "sampling_period_seconds", "value": period},
        {"quantity": "advantage_factor_f_T", "value": adv.f_t},
        {"quantity": "total_time_ratio_cs_over_mcs", "value": adv.time_ratio},
        {
            "quantity": "total_time_mcs_seconds",
            "value": metrics.total_time_mcs(pcfg.M, period, pcfg.T_init),
        },
        {
            "quantity": "total_time_cs_seconds",
            "value": metrics.total_time_cs(pcfg.M, period, pcfg.T_init),
        },
        {
            "quantity": "laser_limited_readout_number",
            "value": m_limit,
        },
        {
            "quantity": "effective_memory_lifetime_seconds",
            "value": metrics.effective_memory_lifetime(pcfg.T1_nuc, m_limit, period),
        },
        {
            "quantity": "memory_lifetime_at_field_seconds",
            "value": metrics.lifetime_vs_field(cfg.b_z_gauss * 1e-4),
        },
    ]
    inputs = metrics.ComparisonInputs(
        M=pcfg.M,
        T=period,
        T_init=pcfg.T_init,
        eta=cfg.build_readout_params().eta,
        c=cfg.build_readout_params().contrast,
        T1_nuc=pcfg.T1_nuc,
        T1_nuc_laser=pcfg.T1_nuc_laser,
        t_laser=pcfg.t_laser,
    )
    fisher_cs = metrics.fisher_cs(inputs)
    fisher_qd = metrics.fisher_qdyne(inputs)
    rows.append({"quantity": "fisher_information_cs", "value": fisher_cs})
    rows.append({"quantity": "fisher_information_qdyne", "value": fisher_qd})
    rows.append(
        {
            "quantity": "cramer_rao_precision_cs",
            "value": metrics.cramer_rao_precision(fisher_cs),
        }
    )
    rows.append(
        {
            "quantity": "cramer_rao_precision_qdyne",
            "value": metrics.cramer_rao_precision(fisher_qd),
        }
    )
    for proto in _PROTO_ORDER:
        for n in n_list:
            rows.append(
                {
                    "quantity": f"fisher_gain_{proto}_N{n}",
                    "value": metrics.ensemble_scaling(proto, n, inputs),
                }
            )
    return rows


# --- argument parsing ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvmcs",
        description="memory-enhanced NV sensing protocol simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="scenario YAML")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--out", type=Path, help="override output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
        p.add_argument("--mode", choices=("ideal", "physical"), help="gate model")
        p.add_argument(
            "--noise", choices=("two-stage", "averaged", "none"), help="readout noise"
        )

    p_run = sub.add_parser("run", help="simulate one scenario")
    common(p_run)

    p_cmp = sub.add_parser("compare", help="protocol SNR vs ensemble size")
    common(p_cmp)
    p_cmp.add_argument(
        "--n-list", default="1,4,16,64", help="comma separated ensemble sizes"
    )
    p_cmp.add_argument("--reps", type=int, default=50, help="repetitions per point")

    p_fit = sub.add_parser("fit", help="re-analyze a written trace")
    p_fit.add_argument("--trace", type=Path, required=True, help="trace CSV path")
    p_fit.add_argument("--out", type=Path, help="output directory")
    p_fit.add_argument("--pad-factor", type=int, default=4)
    p_fit.add_argument("--window", choices=("rect", "hann"), default="rect")

    p_tab = sub.add_parser("tables", help="closed-form figures of merit")
    p_tab.add_argument("--config", type=Path, help="scenario YAML")
    p_tab.add_argument("--out", type=Path, help="output directory")

    return parser


def _load_scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig().validate()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = str(args.out)
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if getattr(args, "noise", None) is not None:
        overrides["noise"] = args.noise
    return cfg.with_overrides(**overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_scenario(args)
            result = run_scenario(cfg, workers=args.workers)
            s = result.summary
            print(f"wrote bundle to {result.out_dir}")
            print(
                f"alias: expected {s['expected_alias_hz']:.4g} Hz, "
                f"spectrum peak {s['psd_peak_hz']:.4g} Hz"
            )
            if s["fwhm_hz"] is not None:
                print(f"linewidth: {s['fwhm_hz']:.4g} Hz FWHM")
            if s["tau_decay_seconds"] is not None:
                print(f"decay time: {s['tau_decay_seconds']:.4g} s")
            if s["sensitivity_t_per_sqrt_hz"] is not None:
                print(f"sensitivity: {s['sensitivity_t_per_sqrt_hz']:.4g} T/sqrt(Hz)")
            return 0

        if args.command == "compare":
            cfg = _load_scenario(args)
            try:
                n_values = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
            except ValueError as exc:
                raise ConfigError(f"--n-list: {exc}") from exc
            result = compare_protocols(
                cfg, n_values, reps=args.reps, workers=args.workers
            )
            print(f"{'protocol':<9}{'N':>5}{'SNR':>12}{'predicted':>12}{'fisher':>10}")
            for row in result.rows:
                print(
                    f"{row['protocol']:<9}{row['N']:>5}{row['snr']:>12.4g}"
                    f"{row['predicted_snr']:>12.4g}{row['fisher_ratio']:>10.4g}"
                )
            for proto, slope in result.slopes.items():
                text = "undefined" if slope is None else f"{slope:+.3f}"
                print(f"slope[{proto}] = {text}")
            return 0

        if args.command == "fit":
            report = reanalyze_trace(
                args.trace, args.out, args.pad_factor, args.window
            )
            print(json.dumps(report, indent=2, sort_keys=True, default=str))
            return 0

        if args.command == "tables":
            cfg = load_config(args.config) if args.config else ScenarioConfig().validate()
            rows = metrics_table(cfg)
            out = Path(args.out) if args.out else Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "metrics.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["quantity", "value"])
                w.writeheader()
                for row in rows:
                    w.writerow(row)
            _write_json(
                {"schema_version": SCHEMA_VERSION, "rows": rows}, out / "metrics.json"
            )
            for row in rows:
                value = row["value"]
                text = f"{value:.6g}" if isinstance(value, float) else str(value)
                print(f"{row['quantity']:<40}{text}")
            return 0

        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
