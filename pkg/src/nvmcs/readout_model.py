"""Optical readout: sensor populations to photon counts and time traces.

A readout of the sensor in p0_e yields on average eta0 photons from |0>e
and eta1 from |-1>e, so the mean count is

    eta (1 + (c/2) (2 p0 - 1)),  eta = (eta0 + eta1)/2,  c = (eta0 - eta1)/eta.

TwoStage noise draws the spin projection first (Bernoulli) and then Poisson
photons for the projected state, which is the physical single-NV cascade.
AveragedPoisson skips projection noise (appropriate for large ensembles read
as one photon stream); Noiseless returns the exact mean. Aggregation over N
runs sums counts per record index, giving the S_k trace whose oscillating
part carries the stored-phase correlator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class NoiseMode(Enum):
    TWO_STAGE = "two-stage"
    AVERAGED_POISSON = "averaged"
    NOISELESS = "none"


@dataclass(frozen=True)
class ReadoutParams:
    """Mean photons per readout for the two sensor states plus noise mode."""

    eta0: float = 0.03
    eta1: float = 0.02
    noise_mode: NoiseMode = NoiseMode.TWO_STAGE

    def __post_init__(self):
        if not self.eta0 >= self.eta1 >= 0.0:
            raise ValueError("need eta0 >= eta1 >= 0")
        if self.eta0 > 0 and not 0.0 <= self.contrast < 2.0:
            raise ValueError("contrast out of range")

    @property
    def eta(self) -> float:
        return 0.5 * (self.eta0 + self.eta1)

    @property
    def contrast(self) -> float:
        return (self.eta0 - self.eta1) / self.eta if self.eta > 0 else 0.0


def readout_counts(
    p0_e: np.ndarray, params: ReadoutParams, rng: np.random.Generator | None
) -> np.ndarray:
    """Vectorized photon counts for an array of |0>e populations."""
    p = np.asarray(p0_e, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("p0_e must lie in [0, 1]")
    if params.noise_mode is NoiseMode.NOISELESS:
        return params.eta0 * p + params.eta1 * (1.0 - p)
    if rng is None:
        raise ValueError("stochastic noise modes need an rng")
    if params.noise_mode is NoiseMode.AVERAGED_POISSON:
        return rng.poisson(params.eta0 * p + params.eta1 * (1.0 - p)).astype(float)
    spin_up = rng.random(p.shape) < p
    means = np.where(spin_up, params.eta0, params.eta1)
    return rng.poisson(means).astype(float)


def readout(
    p0_e: float, params: ReadoutParams, rng: np.random.Generator | None = None
) -> float:
    """Photon count of a single readout."""
    return float(readout_counts(np.asarray(p0_e, dtype=float), params, rng))


@dataclass(frozen=True)
class TimeTrace:
    """Aggregated counts per acquisition: S_k at times T_k = k * period."""

    times: np.ndarray
    counts: np.ndarray
    n_runs: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.counts, dtype=float)
        if t.ndim != 1 or t.shape != s.shape:
            raise ValueError("times and counts must be matching 1-d arrays")
        if np.any(s < 0):
            raise ValueError("counts must be non-negative")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "counts", s)

    def __len__(self) -> int:
        return self.times.size

    @property
    def sampling_period(self) -> float:
        if len(self) < 2:
            raise ValueError("need at least two samples for a period")
        dt = np.diff(self.times)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
            raise ValueError("trace is not uniformly sampled")
        return float(dt[0])

    def write_csv(self, path) -> Path:
        """CSV body (k, T_k_seconds, counts, n_runs) plus a JSON sidecar
        with the metadata; returns the CSV path."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "T_k_seconds", "counts", "n_runs"])
            for k, (t, s) in enumerate(zip(self.times, self.counts), start=1):
                w.writerow([k, f"{t:.12e}", f"{s:.12g}", self.n_runs])
        with open(path.with_suffix(".json"), "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return path

    @classmethod
    def read_csv(cls, path) -> "TimeTrace":
        path = Path(path)
        times, counts, n_runs = [], [], 1
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                times.append(float(row["T_k_seconds"]))
                counts.append(float(row["counts"]))
                n_runs = int(row["n_runs"])
        sidecar = path.with_suffix(".json")
        meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        return cls(np.asarray(times), np.asarray(counts), n_runs, meta)


def aggregate_trace(
    per_run_records,
    params: ReadoutParams,
    rng: np.random.Generator | None,
    period: float,
    metadata: dict | None = None,
) -> TimeTrace:
    """Sum per-run readout counts record by record into one trace.

    per_run_records is either a (n_runs, M) array of p0_e values or a
    sequence of equal-length PopulationRecord sequences.
    """
    if isinstance(per_run_records, np.ndarray):
        p0 = np.atleast_2d(np.asarray(per_run_records, dtype=float))
    else:
        runs = list(per_run_records)
        lengths = {len(r) for r in runs}
        if len(lengths) != 1:
            raise ValueError("all runs must have the same number of records")
        p0 = np.array(
            [[rec.p0_e for rec in run] for run in runs], dtype=float
        )
    if period <= 0:
        raise ValueError("period must be positive")
    counts = readout_counts(p0, params, rng).sum(axis=0)
    times = period * np.arange(1, p0.shape[1] + 1)
    return TimeTrace(times, counts, p0.shape[0], dict(metadata or {}))
