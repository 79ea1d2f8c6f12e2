"""Spectral estimation and model fitting for measured time traces.

The PSD is a mean-subtracted, optionally windowed and zero-padded one-sided
periodogram normalized so that (with a rectangular window) the bin sum
equals the trace variance. All fitters share one Levenberg-Marquardt core
with analytic Jacobians, at most 500 iterations and a relative cost
tolerance of 1e-10; non-convergence and degenerate solutions raise
FitFailure with a residual report instead of returning garbage.

Models:
    Lorentzian          b + a sigma^2 / ((x - c)^2 + sigma^2), FWHM = 2 sigma
    decaying sinusoid   b + a sin(2 pi f x + phi) exp(-x / tau)
    triple Gaussian     b + sum_i a_i exp(-(x - c_i)^2 / (2 sigma_i^2)),
                        populations from normalized |a_i sigma_i| areas
    Bessel              a J0(2 pi f x), field from f via the XY8 phase slope
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, signal, special

from .readout_model import TimeTrace
from .spin_system import SpinSystemParams

MAX_ITER = 500
COST_TOL = 1e-10


class FitFailure(RuntimeError):
    """A fit did not converge or converged to a degenerate solution."""


# --- power spectral density ----------------------------------------------------

@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided periodogram on the grid rfftfreq(pad_factor * M, period)."""

    frequencies: np.ndarray
    power: np.ndarray
    n_samples: int
    period: float
    pad_factor: int
    window: str

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.power, dtype=float)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("frequency and power grids must match")
        df = 1.0 / (self.pad_factor * self.n_samples * self.period)
        if f.size > 1 and abs(f[1] - f[0] - df) > 1e-9 * df:
            raise ValueError("frequency grid spacing inconsistent with padding")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "power", p)

    @property
    def bin_width(self) -> float:
        return 1.0 / (self.pad_factor * self.n_samples * self.period)

    def peak_frequency(self, f_min: float = 0.0) -> float:
        """Frequency of the strongest bin at or above f_min."""
        mask = self.frequencies >= f_min
        if not np.any(mask):
            raise ValueError("no bins at or above f_min")
        idx = np.argmax(np.where(mask, self.power, -np.inf))
        return float(self.frequencies[idx])


def periodogram(
    values: np.ndarray,
    period: float,
    pad_factor: int = 4,
    window: str = "rect",
) -> PowerSpectrum:
    """Mean-subtracted periodogram of a uniformly sampled array.

    Normalization: P_i = w_i |X_i|^2 / (M M_pad) with one-sided weights
    w = 2 except at DC and Nyquist, so sum(P) equals the biased variance of
    the input for the rectangular window.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need a 1-d array with at least two samples")
    if period <= 0:
        raise ValueError("period must be positive")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    m = y.size
    x = y - y.mean()
    if window in ("rect", "rectangular", None):
        win_label = "rect"
    elif window == "hann":
        w = np.hanning(m)
        # keep the variance normalization under the window
        x = x * w / math.sqrt(np.mean(w**2))
        win_label = "hann"
    else:
        raise ValueError(f"unknown window {window!r}")
    m_pad = pad_factor * m
    spec = np.fft.rfft(x, n=m_pad)
    power = np.abs(spec) ** 2 / (m * m_pad)
    weights = np.full(power.shape, 2.0)
    weights[0] = 1.0
    if m_pad % 2 == 0:
        weights[-1] = 1.0
    freqs = np.fft.rfftfreq(m_pad, d=period)
    return PowerSpectrum(freqs, weights * power, m, period, pad_factor, win_label)


def psd(trace: TimeTrace, pad_factor: int = 4, window: str = "rect") -> PowerSpectrum:
    """Periodogram of a TimeTrace (validates uniform sampling)."""
    return periodogram(trace.counts, trace.sampling_period, pad_factor, window)


# --- shared Levenberg-Marquardt core ---------------------------------------------

def _lm(
    model: Callable,
    jac: Callable,
    x: np.ndarray,
    y: np.ndarray,
    p0: Sequence[float],
):
    """LM least squares returning (params, stderr, residual_std)."""

    def residual(p):
        return model(x, *p) - y

    def jacobian(p):
        return jac(x, *p)

    res = optimize.least_squares(
        residual,
        np.asarray(p0, dtype=float),
        jac=jacobian,
        method="lm",
        ftol=COST_TOL,
        xtol=1e-12,
        gtol=1e-12,
        max_nfev=MAX_ITER * (len(p0) + 1),
    )
    r = res.fun
    dof = max(x.size - len(p0), 1)
    s2 = float(r @ r) / dof
    if not res.success:
        raise FitFailure(
            f"no convergence after {res.nfev} evaluations "
            f"(status {res.status}, residual std {math.sqrt(s2):.3g})"
        )
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj) * s2
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * s2
    err = np.sqrt(np.clip(np.diag(cov), 0.0, np.inf))
    return res.x, err, math.sqrt(s2)


# --- Lorentzian spectrum fit ------------------------------------------------------

def lorentzian(x, a, c, sigma, b):
    return b + a * sigma**2 / ((x - c) ** 2 + sigma**2)


def lorentzian_jacobian(x, a, c, sigma, b):
    d = (x - c) ** 2 + sigma**2
    cols = np.empty((x.size, 4))
    cols[:, 0] = sigma**2 / d
    cols[:, 1] = a * sigma**2 * 2.0 * (x - c) / d**2
    cols[:, 2] = 2.0 * a * sigma * (x - c) ** 2 / d**2
    cols[:, 3] = 1.0
    return cols


@dataclass(frozen=True)
class SpectrumFit:
    center: float
    sigma: float
    amplitude: float
    offset: float
    center_err: float
    sigma_err: float
    amplitude_err: float
    offset_err: float
    residual_std: float

    @property
    def fwhm(self) -> float:
        return 2.0 * self.sigma

    @property
    def fwhm_err(self) -> float:
        return 2.0 * self.sigma_err

    def to_dict(self) -> dict:
        return {
            "model": "lorentzian",
            "center_hz": self.center,
            "sigma_hz": self.sigma,
            "fwhm_hz": self.fwhm,
            "amplitude": self.amplitude,
            "offset": self.offset,
            "center_err_hz": self.center_err,
            "sigma_err_hz": self.sigma_err,
            "fwhm_err_hz": self.fwhm_err,
            "amplitude_err": self.amplitude_err,
            "offset_err": self.offset_err,
            "residual_std": self.residual_std,
        }


def fit_lorentzian(
    spectrum: PowerSpectrum, init: Sequence[float] | None = None
) -> SpectrumFit:
    """Four-parameter Lorentzian peak fit of a power spectrum.

    init, when given, is (amplitude, center, sigma, offset); otherwise the
    guess comes from the strongest non-DC bin and a half-power width scan.
    """
    x = spectrum.frequencies
    y = spectrum.power
    if init is None:
        offset0 = float(np.median(y))
        idx = int(np.argmax(np.where(x > 0, y, -np.inf)))
        amp0 = float(y[idx] - offset0)
        if amp0 <= 0:
            raise FitFailure("spectrum has no peak above the median floor")
        above = y > offset0 + 0.5 * amp0
        sigma0 = max(np.count_nonzero(above), 1) * spectrum.bin_width / 2.0
        p0 = (amp0, float(x[idx]), sigma0, offset0)
    else:
        p0 = tuple(init)
    params, err, rstd = _lm(lorentzian, lorentzian_jacobian, x, y, p0)
    a, c, sigma, b = params
    if sigma <= 0:
        # width sign is a gauge freedom of the model; canonicalize
        sigma = abs(sigma)
    if a <= 2.0 * err[0]:
        raise FitFailure(
            f"peak amplitude {a:.3g} consistent with zero (err {err[0]:.3g})"
        )
    return SpectrumFit(
        center=float(c),
        sigma=float(sigma),
        amplitude=float(a),
        offset=float(b),
        center_err=float(err[1]),
        sigma_err=float(err[2]),
        amplitude_err=float(err[0]),
        offset_err=float(err[3]),
        residual_std=rstd,
    )


# --- decaying sinusoid time-domain fit ---------------------------------------------

def decaying_sinusoid(x, a, f, phi, b, tau):
    return b + a * np.sin(2.0 * math.pi * f * x + phi) * np.exp(-x / tau)


def decaying_sinusoid_jacobian(x, a, f, phi, b, tau):
    envelope = np.exp(-x / tau)
    arg = 2.0 * math.pi * f * x + phi
    s = np.sin(arg)
    c = np.cos(arg)
    cols = np.empty((x.size, 5))
    cols[:, 0] = s * envelope
    cols[:, 1] = a * 2.0 * math.pi * x * c * envelope
    cols[:, 2] = a * c * envelope
    cols[:, 3] = 1.0
    cols[:, 4] = a * s * envelope * x / tau**2
    return cols


@dataclass(frozen=True)
class TimeFit:
    amplitude: float
    frequency: float
    phase: float
    offset: float
    tau_decay: float
    amplitude_err: float
    frequency_err: float
    phase_err: float
    offset_err: float
    tau_decay_err: float
    residual_std: float

    def to_dict(self) -> dict:
        return {
            "model": "decaying_sinusoid",
            "amplitude": self.amplitude,
            "frequency_hz": self.frequency,
            "phase_rad": self.phase,
            "offset": self.offset,
            "tau_decay_s": self.tau_decay,
            "amplitude_err": self.amplitude_err,
            "frequency_err_hz": self.frequency_err,
            "phase_err_rad": self.phase_err,
            "offset_err": self.offset_err,
            "tau_decay_err_s": self.tau_decay_err,
            "residual_std": self.residual_std,
        }


def fit_decaying_sinusoid(trace: TimeTrace) -> TimeFit:
    """b + a sin(2 pi f x + phi) exp(-x/tau) against a time trace.

    Frequency and phase guesses come from the padded periodogram peak and
    its projection; the decay guess from the amplitude ratio of the first
    and last thirds of the trace.
    """
    x = trace.times
    y = trace.counts
    if y.size < 8:
        raise FitFailure("too few samples for a five-parameter fit")
    b0 = float(y.mean())
    resid = y - b0
    if np.max(np.abs(resid)) == 0.0:
        raise FitFailure("flat trace has no sinusoidal component")
    spec = periodogram(y, trace.sampling_period, pad_factor=4)
    f0 = spec.peak_frequency(f_min=0.5 * spec.bin_width)
    z = np.sum(resid * np.exp(-2j * math.pi * f0 * x))
    a0 = 2.0 * abs(z) / y.size
    phi0 = math.atan2(float(np.imag(z)), float(np.real(z))) + math.pi / 2.0
    third = y.size // 3
    front = float(np.std(resid[:third]))
    back = float(np.std(resid[-third:]))
    span = float(x[-1] - x[0])
    if front > 0 and 0 < back < front:
        tau0 = span / math.log(front / back) * (2.0 / 3.0)
    else:
        tau0 = 2.0 * span
    params, err, rstd = _lm(
        decaying_sinusoid, decaying_sinusoid_jacobian, x, y, (a0, f0, phi0, b0, tau0)
    )
    a, f, phi, b, tau = params
    if a < 0:  # sign gauge: fold into the phase
        a = -a
        phi += math.pi
    if a <= 2.0 * err[0]:
        raise FitFailure(
            f"amplitude {a:.3g} consistent with zero (err {err[0]:.3g})"
        )
    if tau <= 0:
        raise FitFailure(f"non-physical decay time {tau:.3g} s")
    return TimeFit(
        amplitude=float(a),
        frequency=float(abs(f)),
        phase=float((phi + math.pi) % (2.0 * math.pi) - math.pi),
        offset=float(b),
        tau_decay=float(tau),
        amplitude_err=float(err[0]),
        frequency_err=float(err[1]),
        phase_err=float(err[2]),
        offset_err=float(err[3]),
        tau_decay_err=float(err[4]),
        residual_std=rstd,
    )


# --- triple-Gaussian ODMR fit --------------------------------------------------------

def triple_gaussian(x, a1, c1, s1, a2, c2, s2, a3, c3, s3, b):
    out = np.full_like(np.asarray(x, dtype=float), b)
    for a, c, s in ((a1, c1, s1), (a2, c2, s2), (a3, c3, s3)):
        out = out + a * np.exp(-0.5 * ((x - c) / s) ** 2)
    return out


def triple_gaussian_jacobian(x, a1, c1, s1, a2, c2, s2, a3, c3, s3, b):
    cols = np.empty((x.size, 10))
    for i, (a, c, s) in enumerate(((a1, c1, s1), (a2, c2, s2), (a3, c3, s3))):
        g = np.exp(-0.5 * ((x - c) / s) ** 2)
        cols[:, 3 * i] = g
        cols[:, 3 * i + 1] = a * g * (x - c) / s**2
        cols[:, 3 * i + 2] = a * g * (x - c) ** 2 / s**3
    cols[:, 9] = 1.0
    return cols


@dataclass(frozen=True)
class TripleGaussianFit:
    """Three (amplitude, center, sigma) components sorted by center plus a
    common offset; populations are the normalized absolute areas, which for
    the hyperfine ODMR triplet come out ordered m_I = (+1, 0, -1)."""

    amplitudes: tuple
    centers: tuple
    sigmas: tuple
    offset: float
    amplitude_errs: tuple
    center_errs: tuple
    sigma_errs: tuple
    offset_err: float
    residual_std: float
    populations: tuple = field(init=False)

    def __post_init__(self):
        areas = np.abs(np.asarray(self.amplitudes) * np.asarray(self.sigmas))
        total = areas.sum()
        if total <= 0:
            raise FitFailure("vanishing total dip area")
        object.__setattr__(self, "populations", tuple(areas / total))

    def to_dict(self) -> dict:
        return {
            "model": "triple_gaussian",
            "amplitudes": list(self.amplitudes),
            "centers": list(self.centers),
            "sigmas": list(self.sigmas),
            "offset": self.offset,
            "amplitude_errs": list(self.amplitude_errs),
            "center_errs": list(self.center_errs),
            "sigma_errs": list(self.sigma_errs),
            "offset_err": self.offset_err,
            "populations": list(self.populations),
            "residual_std": self.residual_std,
        }


def fit_triple_gaussian(x: np.ndarray, y: np.ndarray) -> TripleGaussianFit:
    """Three Gaussian dips (or peaks) on a common offset.

    Dips are located with a minimum-prominence peak search on the inverted
    data; fewer than three resolvable dips is a failure.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be matching 1-d arrays")
    b0 = float(np.median(y))
    depth = y - b0
    flipped = np.max(np.abs(depth)) == abs(np.min(depth))
    d = -depth if flipped else depth
    scale = float(np.max(d))
    if scale <= 0:
        raise FitFailure("no structure above the baseline")
    peaks, props = signal.find_peaks(
        d, prominence=0.1 * scale, distance=max(1, x.size // 50)
    )
    if peaks.size < 3:
        raise FitFailure(f"found {peaks.size} resolvable dips, need 3")
    order = np.argsort(props["prominences"])[::-1][:3]
    picked = np.sort(peaks[order])
    span = float(x[-1] - x[0])
    sign = -1.0 if flipped else 1.0
    p0 = []
    for idx in picked:
        p0 += [sign * d[idx], float(x[idx]), span / 30.0]
    p0.append(b0)
    params, err, rstd = _lm(triple_gaussian, triple_gaussian_jacobian, x, y, p0)
    comps = [(params[3 * i], params[3 * i + 1], abs(params[3 * i + 2])) for i in range(3)]
    errs = [(err[3 * i], err[3 * i + 1], err[3 * i + 2]) for i in range(3)]
    order = np.argsort([c[1] for c in comps])
    comps = [comps[i] for i in order]
    errs = [errs[i] for i in order]
    return TripleGaussianFit(
        amplitudes=tuple(c[0] for c in comps),
        centers=tuple(c[1] for c in comps),
        sigmas=tuple(c[2] for c in comps),
        offset=float(params[9]),
        amplitude_errs=tuple(e[0] for e in errs),
        center_errs=tuple(e[1] for e in errs),
        sigma_errs=tuple(e[2] for e in errs),
        offset_err=float(err[9]),
        residual_std=rstd,
    )


# --- Bessel-J0 calibration fit ---------------------------------------------------------

def bessel_j0(x, a, f):
    return a * special.j0(2.0 * math.pi * f * x)


def bessel_j0_jacobian(x, a, f):
    arg = 2.0 * math.pi * f * x
    cols = np.empty((x.size, 2))
    cols[:, 0] = special.j0(arg)
    cols[:, 1] = -a * special.j1(arg) * 2.0 * math.pi * x
    return cols


@dataclass(frozen=True)
class BesselFit:
    amplitude: float
    frequency: float
    amplitude_err: float
    frequency_err: float
    field_gauss: float
    field_gauss_err: float
    residual_std: float

    def to_dict(self) -> dict:
        return {
            "model": "bessel_j0",
            "amplitude": self.amplitude,
            "frequency_hz": self.frequency,
            "amplitude_err": self.amplitude_err,
            "frequency_err_hz": self.frequency_err,
            "field_gauss": self.field_gauss,
            "field_gauss_err": self.field_gauss_err,
            "residual_std": self.residual_std,
        }


def fit_bessel_j0(
    x: np.ndarray,
    y: np.ndarray,
    params: SpinSystemParams | None = None,
) -> BesselFit:
    """a J0(2 pi f x) against fluorescence vs total accumulation time.

    The field estimate inverts the linear phase pickup: a drive of strength
    B makes the argument grow as (2/pi) gamma_NV B x, so B = pi^2 f / gamma_NV.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be matching 1-d arrays")
    if np.max(np.abs(y)) == 0.0:
        raise FitFailure("all-zero data is degenerate for the Bessel model")
    sp = params if params is not None else SpinSystemParams()
    a0 = float(y[np.argmin(np.abs(x))])
    crossings = np.nonzero(np.diff(np.sign(y)) != 0)[0]
    if crossings.size == 0 or a0 == 0.0:
        raise FitFailure("data does not reach the first J0 zero")
    x_zero = 0.5 * (x[crossings[0]] + x[crossings[0] + 1])
    f0 = 2.404825557695773 / (2.0 * math.pi * x_zero)  # first J0 root
    params_fit, err, rstd = _lm(bessel_j0, bessel_j0_jacobian, x, y, (a0, f0))
    a, f = params_fit
    if abs(a) <= 2.0 * err[0]:
        raise FitFailure(
            f"amplitude {a:.3g} consistent with zero (err {err[0]:.3g})"
        )
    b_gauss = math.pi**2 * abs(f) / sp.gamma_NV
    return BesselFit(
        amplitude=float(a),
        frequency=float(abs(f)),
        amplitude_err=float(err[0]),
        frequency_err=float(err[1]),
        field_gauss=float(b_gauss),
        field_gauss_err=float(math.pi**2 * err[1] / sp.gamma_NV),
        residual_std=rstd,
    )


# --- sensitivity -------------------------------------------------------------------------

def sensitivity(
    spec_fit: SpectrumFit, noise_floor_std: float, B_test: float, T_meas: float
) -> float:
    """Field sensitivity (noise std / peak value) * B_test * sqrt(T_meas).

    Units follow B_test (tesla in, T/sqrt(Hz) out); noise_floor_std is the
    residual std of the spectrum fit away from the peak.
    """
    peak = spec_fit.offset + spec_fit.amplitude
    if peak <= 0:
        raise ValueError("peak value must be positive")
    if noise_floor_std < 0 or B_test < 0 or T_meas <= 0:
        raise ValueError("noise, field and time must be non-negative (T_meas > 0)")
    return noise_floor_std / peak * B_test * math.sqrt(T_meas)
