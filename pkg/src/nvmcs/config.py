"""Scenario configuration: unit-suffixed YAML schema and builders.

The file format is flat-nested YAML with explicit units in the key names
(T_us, b_z_gauss, nu_s_mhz, ...). ScenarioConfig stores exactly those
interface values, so serialization round-trips without any unit conversion
loss; the build_* methods convert once into the internal rad/s and seconds
conventions. Every output bundle stamps schema_version, and re-analysis of
a trace written under a different schema version is refused.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from pathlib import Path

import yaml

from .protocol_engine import Protocol, ProtocolConfig
from .readout_model import NoiseMode, ReadoutParams
from .signal_model import SignalConfig, SignalMode
from .spin_system import TWO_PI, SpinSystemParams

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario in interface units."""

    master_seed: int = 2025
    out_dir: str = "results"
    mode: str = "ideal"  # gate construction: ideal | physical
    protocol: str = "mcs"  # mcs | cs | qdyne

    # spin system
    d_gs_mhz: float = 2870.0
    a_par_mhz: float = -2.166
    p_quad_mhz: float = -4.945
    gamma_nv_mhz_per_g: float = 2.803
    gamma_n_khz_per_g: float = 0.308
    b_z_gauss: float = 2043.763

    # signal
    signal_mode: str = "classical"  # classical | statistical
    nu_s_mhz: float = 1.0
    b_amp_gauss: float = 0.0315
    n_sensors: int = 1

    # protocol timing / resources
    M: int = 1991
    n_runs: int = 100
    T_us: float = 15.063
    T_init_us: float = 101.57
    t_dd_us: float = 4.0
    t_laser_ns: float = 200.0
    T1_nuc_s: float = 0.7
    T1_nuc_laser_us: float = 210.0
    init_fidelity: float = 1.0
    t_wait_us: float = 0.0

    # readout
    eta0: float = 0.03
    eta1: float = 0.02
    noise: str = "two-stage"  # two-stage | averaged | none

    # analysis
    pad_factor: int = 4
    window: str = "rect"

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.protocol not in ("mcs", "cs", "qdyne"):
            raise ConfigError(f"protocol: unknown value {self.protocol!r}")
        if self.mode not in ("ideal", "physical"):
            raise ConfigError(f"mode: unknown value {self.mode!r}")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")

    # --- builders into internal conventions -------------------------------

    def build_spin_params(self) -> SpinSystemParams:
        try:
            return SpinSystemParams(
                D=TWO_PI * self.d_gs_mhz * 1e6,
                A_par=TWO_PI * self.a_par_mhz * 1e6,
                P_quad=TWO_PI * self.p_quad_mhz * 1e6,
                gamma_NV=TWO_PI * self.gamma_nv_mhz_per_g * 1e6,
                gamma_N=TWO_PI * self.gamma_n_khz_per_g * 1e3,
                B_z=self.b_z_gauss,
            )
        except ValueError as exc:
            raise ConfigError(f"spin system: {exc}") from exc

    def build_signal_config(self) -> SignalConfig:
        try:
            return SignalConfig(
                mode=SignalMode(self.signal_mode),
                nu_s=self.nu_s_mhz * 1e6,
                B_amp=self.b_amp_gauss,
                n_sensors=self.n_sensors,
            )
        except ValueError as exc:
            raise ConfigError(f"signal: {exc}") from exc

    def build_protocol_config(self) -> ProtocolConfig:
        try:
            return ProtocolConfig(
                protocol=Protocol(self.protocol),
                M=self.M,
                N=self.n_runs,
                T=self.T_us * 1e-6,
                T_init=self.T_init_us * 1e-6,
                t_dd=self.t_dd_us * 1e-6,
                t_laser=self.t_laser_ns * 1e-9,
                T1_nuc=self.T1_nuc_s,
                T1_nuc_laser=self.T1_nuc_laser_us * 1e-6,
                init_fidelity=self.init_fidelity,
                t_wait=self.t_wait_us * 1e-6,
            )
        except ValueError as exc:
            raise ConfigError(f"protocol: {exc}") from exc

    def build_readout_params(self) -> ReadoutParams:
        try:
            return ReadoutParams(
                eta0=self.eta0, eta1=self.eta1, noise_mode=NoiseMode(self.noise)
            )
        except ValueError as exc:
            raise ConfigError(f"readout: {exc}") from exc

    def validate(self) -> "ScenarioConfig":
        """Build every derived object once so errors surface with section names."""
        self.build_spin_params()
        self.build_signal_config()
        self.build_protocol_config()
        self.build_readout_params()
        if self.pad_factor < 1:
            raise ConfigError("analysis: pad_factor must be >= 1")
        if self.window not in ("rect", "rectangular", "hann"):
            raise ConfigError(f"analysis: unknown window {self.window!r}")
        return self

    # --- serialization -----------------------------------------------------

    _SECTIONS = {
        "spin_system": (
            "d_gs_mhz", "a_par_mhz", "p_quad_mhz",
            "gamma_nv_mhz_per_g", "gamma_n_khz_per_g", "b_z_gauss",
        ),
        "signal": ("signal_mode", "nu_s_mhz", "b_amp_gauss", "n_sensors"),
        "protocol_params": (
            "M", "n_runs", "T_us", "T_init_us", "t_dd_us", "t_laser_ns",
            "T1_nuc_s", "T1_nuc_laser_us", "init_fidelity", "t_wait_us",
        ),
        "readout": ("eta0", "eta1", "noise"),
        "analysis": ("pad_factor", "window"),
    }

    def to_dict(self) -> dict:
        flat = asdict(self)
        out = {
            "schema_version": SCHEMA_VERSION,
            "master_seed": self.master_seed,
            "out_dir": self.out_dir,
            "mode": self.mode,
            "protocol": self.protocol,
        }
        for section, keys in self._SECTIONS.items():
            out[section] = {k: flat[k] for k in keys}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
            )
        known_top = {"schema_version", "master_seed", "out_dir", "mode", "protocol"}
        flat = {}
        for key, value in data.items():
            if key in ("schema_version",):
                continue
            if key in known_top:
                flat[key] = value
            elif key in cls._SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"{key}: expected a mapping")
                allowed = set(cls._SECTIONS[key])
                for k, v in value.items():
                    if k not in allowed:
                        raise ConfigError(f"{key}: unknown field {k!r}")
                    flat[k] = v
            else:
                raise ConfigError(f"unknown section {key!r}")
        try:
            cfg = cls(**flat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        """Copy with CLI-level overrides (None values ignored)."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates).validate() if updates else self


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return ScenarioConfig.from_dict(data)


def save_config(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
