"""Figure rendering for the CLI report path.

Every function takes prepared data plus an output path and writes one PNG;
nothing here recomputes physics. The Agg backend is forced so headless runs
work without a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 140


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_trace(trace, path, max_points: int = 4000) -> Path:
    """Photon counts against lab time, decimated if very long."""
    t = np.asarray(trace.times)
    c = np.asarray(trace.counts)
    step = max(1, len(t) // max_points)
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    ax.plot(t[::step] * 1e3, c[::step], lw=0.6, color="tab:blue")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel(f"counts / {trace.n_runs} runs")
    ax.set_title("readout trace")
    return _finish(fig, path)


def plot_spectrum(spectrum, path, fit=None, marker_hz: float | None = None) -> Path:
    """One-sided PSD with optional Lorentzian fit overlay and frequency marker."""
    f = np.asarray(spectrum.frequencies)
    p = np.asarray(spectrum.power)
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ax.plot(f, p, lw=0.8, color="tab:blue", label="PSD")
    if fit is not None:
        from .analysis import lorentzian

        grid = np.linspace(f[0], f[-1], 4 * len(f))
        ax.plot(
            grid,
            lorentzian(grid, fit.amplitude, fit.center, fit.sigma, fit.offset),
            lw=1.0,
            color="tab:red",
            label=f"fit: {fit.center:.1f} Hz, FWHM {fit.fwhm:.1f} Hz",
        )
    if marker_hz is not None:
        ax.axvline(marker_hz, color="gray", ls="--", lw=0.8, label="expected alias")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("power (counts$^2$)")
    ax.set_title("power spectrum")
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, path)


def plot_odmr(freq_mhz, signal, path, fit=None) -> Path:
    freq_mhz = np.asarray(freq_mhz)
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ax.plot(freq_mhz, signal, ".", ms=3, color="tab:blue", label="spectrum")
    if fit is not None:
        from .analysis import triple_gaussian

        grid = np.linspace(freq_mhz[0], freq_mhz[-1], 2000)
        args = []
        for amp, cen, sig in zip(fit.amplitudes, fit.centers, fit.sigmas):
            args.extend((amp, cen, sig))
        args.append(fit.offset)
        ax.plot(grid, triple_gaussian(grid, *args), lw=1.0, color="tab:red", label="fit")
    ax.set_xlabel("microwave frequency (MHz)")
    ax.set_ylabel("fluorescence (norm.)")
    ax.set_title("pulsed ODMR")
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, path)


def plot_scaling(table: dict, path, slopes: dict | None = None) -> Path:
    """SNR against ensemble size per protocol on log-log axes.

    table maps protocol name to (N_values, snr_values).
    """
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    colors = {"mcs": "tab:blue", "cs": "tab:orange", "qdyne": "tab:green"}
    for name, (n_values, snr_values) in table.items():
        n_values = np.asarray(n_values, dtype=float)
        snr_values = np.asarray(snr_values, dtype=float)
        label = name.upper()
        if slopes and name in slopes and slopes[name] is not None:
            label += f" (slope {slopes[name]:+.2f})"
        ax.loglog(
            n_values, snr_values, "o-", ms=4, lw=1.0,
            color=colors.get(name, None), label=label,
        )
    ax.set_xlabel("ensemble size N")
    ax.set_ylabel("amplitude SNR")
    ax.set_title("signal scaling with ensemble size")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_correlation(delta, curves: dict, path) -> Path:
    """Correlation against phase offset for several model routes."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for label, values in curves.items():
        ax.plot(delta, values, lw=1.0, label=label)
    ax.set_xlabel("phase offset (rad)")
    ax.set_ylabel("correlation")
    ax.legend(fontsize=8)
    return _finish(fig, path)
