"""Per-run signal realizations and the undersampling map.

Two signal sources are modeled. A classical coherent field has a fixed
envelope B_s and a uniformly random initial phase xi0 that is not phase
locked to the control fields, so it redraws from run to run. Statistical
polarization draws the envelope from a Rayleigh distribution with scale
B_rms (Gaussian quadratures of a spin bath's transverse field) and an
independent uniform phase, giving <B^2 cos^2 xi> = B_rms^2. The envelope is
constant within one full sequence run (bath correlation time much longer
than the run), and independent across runs and across sensors.

Sampling the signal at interval T >> 1/nu_s aliases it to the undersampled
frequency f_u, folded into the first Nyquist zone [0, 1/(2T)].

The closed-form correlators at the bottom are the analytic references for
<sin(phi_0) sin(phi_k)> used by tests and by the compare pipeline. The
three-term small-phase expansion `third_order_correlation` is kept verbatim
from the derivation it reproduces; see its docstring for the convention
caveat that tests pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

TWO_PI = 2.0 * math.pi


class SignalMode(Enum):
    CLASSICAL = "classical"
    STATISTICAL = "statistical"


@dataclass(frozen=True)
class SignalConfig:
    """Signal source description.

    B_amp is the fixed envelope B_s in classical mode and the root mean
    square field B_rms in statistical mode, in Gauss. n_sensors is the
    ensemble size N.
    """

    mode: SignalMode
    nu_s: float
    B_amp: float
    n_sensors: int = 1

    def __post_init__(self):
        if self.nu_s <= 0:
            raise ValueError("nu_s must be positive")
        if self.B_amp < 0:
            raise ValueError("B_amp must be non-negative")
        if self.n_sensors < 1:
            raise ValueError("n_sensors must be >= 1")


@dataclass(frozen=True)
class SignalRealization:
    """Envelope and initial phase of one run (or one sensor within a run)."""

    B: float
    xi0: float
    sensor_index: int = 0


def draw_realization(
    cfg: SignalConfig, rng: np.random.Generator, sensor_index: int = 0
) -> SignalRealization:
    """One realization: xi0 ~ U[0, 2pi); B fixed or Rayleigh(scale=B_rms)."""
    xi0 = rng.uniform(0.0, TWO_PI)
    if cfg.mode is SignalMode.CLASSICAL:
        b = cfg.B_amp
    else:
        b = rng.rayleigh(scale=cfg.B_amp)
    return SignalRealization(B=b, xi0=xi0, sensor_index=sensor_index)


def draw_realizations(cfg: SignalConfig, rng: np.random.Generator) -> list[SignalRealization]:
    """One realization per sensor, independent draws."""
    return [draw_realization(cfg, rng, sensor_index=j) for j in range(cfg.n_sensors)]


def phase_at(realization: SignalRealization, nu_s: float, delta_t: float) -> float:
    """Signal phase xi0 + 2 pi nu_s delta_t, reduced mod 2 pi."""
    return (realization.xi0 + TWO_PI * nu_s * delta_t) % TWO_PI


def undersampled_frequency(nu_s: float, T: float) -> float:
    """Alias of nu_s under sampling at interval T, in [0, 1/(2T)].

    f_u = |nu_s - m/T| with m the nearest integer to nu_s T.
    """
    if T <= 0:
        raise ValueError("sampling interval T must be positive")
    m = round(nu_s * T)
    f_u = abs(nu_s - m / T)
    nyquist = 0.5 / T
    # the nearest-integer fold already lands in the first zone; clamp guards
    # the half-integer boundary where both folds are equidistant
    return min(f_u, 1.0 / T - f_u) if f_u > nyquist else f_u


# --- closed-form correlators -------------------------------------------------

def third_order_correlation(phi_rms: float, delta: float) -> float:
    """Three-term small-phase expansion of the stored-phase correlator.

    s^2 cos(d) (1 - s^2/4 + s^4/72) + (s^6/288) cos(d) cos(2d), s = phi_rms.

    Caveat, pinned by tests: this expression equals exactly twice the
    uniform-phase average of (x - x^3/6)-truncated products with peak phase
    amplitude s. It is NOT the expectation of sin(phi_0) sin(phi_k) under
    either signal mode of this package (those are the two exact correlators
    below); the deviation grows from ~2% of the signal at s = 0.3 to ~29% at
    s = 1. It is provided because downstream comparisons quote it.
    """
    s2 = phi_rms * phi_rms
    main = s2 * math.cos(delta) * (1.0 - s2 / 4.0 + s2 * s2 / 72.0)
    cross = (s2 ** 3 / 288.0) * math.cos(delta) * math.cos(2.0 * delta)
    return main + cross


def correlation_classical_exact(
    phi_rms: float, delta: float, n_terms: int = 16
) -> float:
    """Exact <sin(phi_0) sin(phi_k)> for the classical mode.

    phi = sqrt(2) phi_rms cos(xi), xi uniform: the correlator is the Bessel
    harmonic series sum_n 2 J_{2n+1}(sqrt2 phi_rms)^2 cos((2n+1) delta).
    """
    amp = math.sqrt(2.0) * phi_rms
    total = 0.0
    for n in range(n_terms):
        m = 2 * n + 1
        total += 2.0 * special.jv(m, amp) ** 2 * math.cos(m * delta)
    return total


def correlation_statistical_exact(phi_rms: float, delta: float) -> float:
    """Exact <sin(phi_0) sin(phi_k)> for the statistical mode.

    phi_0, phi_k jointly Gaussian with variance phi_rms^2 and correlation
    cos(delta): the correlator is exp(-phi_rms^2) sinh(phi_rms^2 cos(delta)).
    """
    s2 = phi_rms * phi_rms
    return math.exp(-s2) * math.sinh(s2 * math.cos(delta))


def correlation_exact(mode: SignalMode, phi_rms: float, delta: float) -> float:
    if mode is SignalMode.CLASSICAL:
        return correlation_classical_exact(phi_rms, delta)
    return correlation_statistical_exact(phi_rms, delta)
