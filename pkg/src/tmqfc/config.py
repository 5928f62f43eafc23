"""Run configuration: TOML parsing, defaults and validation.

Every table and key is optional except ``experiment.name``. Unknown keys are
rejected so typos surface immediately. The resolved configuration (all
defaults filled in) round-trips through ``to_dict`` / ``from_dict``.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .grid import register_wavelength
from .shapes import ShapeSpec

AUTO = "auto"
WIDE_GRID_EXPERIMENTS = ("delay_scan_widths", "skew_vs_power")

EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "fringe_scan": {
        "mirror": "s",
        "start_nm": 0.0,
        "stop_nm": 1000.0,
        "n_points": 81,
        "s_step_ratio": 1.0,
    },
    "peak_ce_matrix": {
        "pumps": ["p0", "p1", "p2"],
        "signals": ["s0", "s1", "s2"],
    },
    "delay_scan_widths": {
        "arm": "both",
        "gamma2_ratio": 0.1,
        "s_range_fs": 3000.0,
        "r_range_fs": AUTO,
        "n_delays": 121,
    },
    "skew_vs_power": {
        "gamma1_eff": [0.6, 0.9, 1.2, 1.5],
        "gamma2_eff": 0.06,
        "range_fs": 2500.0,
        "n_delays": 51,
    },
    "tradeoff_comparison": {
        "single_gamma_eff": [0.1, 2.4, 24],
        "double_gamma_eff": [0.1, 1.2, 23],
        "ce_match": 0.9,
    },
    "visibility_vs_imbalance": {
        "operating_point": "balanced",
        "loss_product": 0.64,
        "max_imbalance": 1.25,
        "n_points": 19,
    },
    "schmidt_modes": {
        "n_modes": 8,
    },
}

CHOICES = {
    "mirror": ("s", "r", "both_same", "both_opposite"),
    "arm": ("s", "r", "both"),
    "operating_point": ("balanced", "configured"),
}

# tables written to result sidecars for information only
INFORMATIONAL_TABLES = ("derived", "summary")


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")


def _number(table: dict, key: str, where: str, default, positive: bool = False):
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{where}.{key} must be positive, got {value!r}")
    return float(value)


def _integer(table: dict, key: str, where: str, default, minimum: int = 1) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {value}")
    return value


def _number_or_auto(table: dict, key: str, where: str):
    value = table.get(key, AUTO)
    if value == AUTO:
        return AUTO
    return _number(table, key, where, None)


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 2048
    span_fs: float = 20000.0


@dataclass(frozen=True)
class MediumConfig:
    """Either ``(zeta, tau_p_fs)`` or the slowness triple ``beta_*`` (fs/mm)."""

    length_mm: float = 5.0
    zeta: float | None = 10.0
    tau_p_fs: float | None = 500.0
    pump_signal_walkoff_fs: float | None = 40.0
    walkoff_sign: int | None = 1
    beta_p: float | None = None
    beta_s: float | None = None
    beta_r: float | None = None
    n_z_steps: int = 512

    @property
    def uses_betas(self) -> bool:
        return self.beta_p is not None

    def slownesses(self) -> tuple[float, float, float]:
        if self.uses_betas:
            return self.beta_p, self.beta_s, self.beta_r
        beta_s = self.pump_signal_walkoff_fs / self.length_mm
        beta_r = beta_s + self.walkoff_sign * self.zeta * self.tau_p_fs / self.length_mm
        return 0.0, beta_s, beta_r


@dataclass(frozen=True)
class PumpConfig:
    shape: str = "p0"
    bandwidth: float | None = None
    gamma_eff: float | None = None
    ce_target: float | None = 0.5
    phase: float = 0.0
    wavelength_nm: float = 821.0


@dataclass(frozen=True)
class SignalConfig:
    shape: str = "s0"
    wavelength_nm: float = 812.2


@dataclass(frozen=True)
class NumericsConfig:
    basis: str = "fourier"
    n_eff: int = 512
    n_kept: int = 32


@dataclass(frozen=True)
class CascadeConfig:
    phase_s: float = 0.0
    phase_r: float = 0.0
    pump2_phase: float = 0.0
    delay_s: float | str = AUTO
    delay_r: float | str = AUTO
    transmission_s: float = 1.0
    transmission_r: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)
    dump_green: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    medium: MediumConfig
    pump: PumpConfig
    signal: SignalConfig
    numerics: NumericsConfig
    cascade: CascadeConfig
    experiment: ExperimentConfig
    output: OutputConfig

    @property
    def pump_bandwidth(self) -> float:
        if self.pump.bandwidth is not None:
            return self.pump.bandwidth
        tau = self.medium.tau_p_fs if self.medium.tau_p_fs is not None else 500.0
        return 1.0 / tau

    @property
    def register_wavelength(self) -> float:
        return register_wavelength(self.pump.wavelength_nm, self.signal.wavelength_nm)

    def to_dict(self) -> dict:
        """Resolved configuration as plain TOML-serializable tables (no nulls)."""
        out = {}
        for name in ("grid", "medium", "pump", "signal", "numerics", "cascade", "experiment", "output"):
            table = asdict(getattr(self, name))
            out[name] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in table.items() if v is not None}
        params = out["experiment"].pop("params")
        out["experiment"].update(copy.deepcopy(params))
        return out


def _parse_grid(table: dict, experiment: str, tau_p: float) -> GridConfig:
    _check_keys(table, ("n_points", "span_fs"), "grid")
    wide = experiment in WIDE_GRID_EXPERIMENTS
    span_default = (80.0 if wide else 40.0) * tau_p
    n = _integer(table, "n_points", "grid", 2048, minimum=8)
    return GridConfig(n, _number(table, "span_fs", "grid", span_default, positive=True))


def _parse_medium(table: dict) -> MediumConfig:
    beta_keys = ("beta_p", "beta_s", "beta_r")
    zeta_keys = ("zeta", "tau_p_fs", "pump_signal_walkoff_fs", "walkoff_sign")
    _check_keys(table, ("length_mm", "n_z_steps") + beta_keys + zeta_keys, "medium")
    length = _number(table, "length_mm", "medium", 5.0, positive=True)
    n_z = _integer(table, "n_z_steps", "medium", 512, minimum=16)
    given_beta = [k for k in beta_keys if k in table]
    given_zeta = [k for k in zeta_keys if k in table]
    if given_beta and given_zeta:
        raise ConfigError(f"[medium] keys {', '.join(given_beta)} and {', '.join(given_zeta)} are "
                          "mutually exclusive: give the slowness triple or (zeta, tau_p_fs)")
    if given_beta:
        if len(given_beta) != 3:
            raise ConfigError("[medium] needs all of beta_p, beta_s, beta_r")
        b = [_number(table, k, "medium", None) for k in beta_keys]
        return MediumConfig(length, None, None, None, None, *b, n_z_steps=n_z)
    sign = table.get("walkoff_sign", 1)
    if sign not in (1, -1) or isinstance(sign, bool):
        raise ConfigError(f"medium.walkoff_sign must be 1 or -1, got {sign!r}")
    return MediumConfig(
        length,
        _number(table, "zeta", "medium", 10.0, positive=True),
        _number(table, "tau_p_fs", "medium", 500.0, positive=True),
        _number(table, "pump_signal_walkoff_fs", "medium", 40.0),
        sign,
        n_z_steps=n_z,
    )


def _parse_pump(table: dict) -> PumpConfig:
    keys = ("shape", "bandwidth", "gamma_eff", "ce_target", "phase", "wavelength_nm")
    _check_keys(table, keys, "pump")
    if "gamma_eff" in table and "ce_target" in table:
        raise ConfigError("[pump] keys gamma_eff and ce_target are mutually exclusive")
    shape = str(table.get("shape", "p0"))
    try:
        ShapeSpec.from_label(shape)
    except ValueError as exc:
        raise ConfigError(f"pump.shape: {exc}") from None
    gamma_eff = _number(table, "gamma_eff", "pump", None)
    ce = None if gamma_eff is not None else _number(table, "ce_target", "pump", 0.5)
    if gamma_eff is not None and gamma_eff < 0:
        raise ConfigError("pump.gamma_eff must be nonnegative")
    if ce is not None and not 0 <= ce < 1:
        raise ConfigError(f"pump.ce_target must lie in [0, 1), got {ce}")
    return PumpConfig(shape, _number(table, "bandwidth", "pump", None, positive=True), gamma_eff, ce,
                      _number(table, "phase", "pump", 0.0),
                      _number(table, "wavelength_nm", "pump", 821.0, positive=True))


def _parse_signal(table: dict) -> SignalConfig:
    _check_keys(table, ("shape", "wavelength_nm"), "signal")
    shape = str(table.get("shape", "s0"))
    try:
        ShapeSpec.from_label(shape)
    except ValueError as exc:
        raise ConfigError(f"signal.shape: {exc}") from None
    return SignalConfig(shape, _number(table, "wavelength_nm", "signal", 812.2, positive=True))


def _parse_numerics(table: dict) -> NumericsConfig:
    _check_keys(table, ("basis", "n_eff", "n_kept"), "numerics")
    basis = table.get("basis", "fourier")
    if basis not in ("fourier", "delta"):
        raise ConfigError(f"numerics.basis must be 'fourier' or 'delta', got {basis!r}")
    return NumericsConfig(basis, _integer(table, "n_eff", "numerics", 512, minimum=8),
                          _integer(table, "n_kept", "numerics", 32))


def _parse_cascade(table: dict) -> CascadeConfig:
    keys = ("phase_s", "phase_r", "pump2_phase", "delay_s", "delay_r", "transmission_s", "transmission_r")
    _check_keys(table, keys, "cascade")
    values = {}
    for k in ("phase_s", "phase_r", "pump2_phase"):
        values[k] = _number(table, k, "cascade", 0.0)
    for k in ("delay_s", "delay_r"):
        values[k] = _number_or_auto(table, k, "cascade")
    for k in ("transmission_s", "transmission_r"):
        t = _number(table, k, "cascade", 1.0)
        if not 0 <= t <= 1:
            raise ConfigError(f"cascade.{k} must lie in [0, 1], got {t}")
        values[k] = t
    return CascadeConfig(**values)


def _parse_experiment(table: dict) -> ExperimentConfig:
    if "name" not in table:
        raise ConfigError("[experiment] needs a name; one of " + ", ".join(EXPERIMENT_DEFAULTS))
    name = table["name"]
    if name not in EXPERIMENT_DEFAULTS:
        raise ConfigError(f"unknown experiment {name!r}; one of " + ", ".join(EXPERIMENT_DEFAULTS))
    defaults = EXPERIMENT_DEFAULTS[name]
    given = {k: v for k, v in table.items() if k != "name"}
    _check_keys(given, defaults, f"experiment ({name})")
    params = copy.deepcopy(defaults)
    for key, value in given.items():
        default = defaults[key]
        if key in CHOICES:
            if value not in CHOICES[key]:
                raise ConfigError(f"experiment.{key} must be one of {', '.join(CHOICES[key])}, got {value!r}")
            params[key] = value
            continue
        if default == AUTO:
            params[key] = _number_or_auto(given, key, "experiment")
            continue
        if isinstance(default, list) != isinstance(value, list):
            raise ConfigError(f"experiment.{key} must be {'a list' if isinstance(default, list) else 'a scalar'}")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"experiment.{key} must be a number, got {value!r}")
            value = int(value) if isinstance(default, int) else float(value)
        params[key] = value
    return ExperimentConfig(name, params)


def _parse_output(table: dict) -> OutputConfig:
    _check_keys(table, ("directory", "formats", "dump_green"), "output")
    formats = table.get("formats", ["csv"])
    if isinstance(formats, str):
        formats = [formats]
    bad = [f for f in formats if f != "csv"]
    if bad:
        raise ConfigError(f"unsupported output format(s): {', '.join(map(str, bad))}; only csv")
    dump = table.get("dump_green", False)
    if not isinstance(dump, bool):
        raise ConfigError("output.dump_green must be true or false")
    return OutputConfig(str(table.get("directory", "out")), tuple(formats), dump)


def from_dict(data: dict) -> RunConfig:
    """Validate a raw table tree and fill in every default."""
    tables = ("grid", "medium", "pump", "signal", "numerics", "cascade", "experiment", "output")
    _check_keys(data, tables + INFORMATIONAL_TABLES, "top level")
    for name in tables:
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"[{name}] must be a table")
    experiment = _parse_experiment(data.get("experiment", {}))
    medium = _parse_medium(data.get("medium", {}))
    pump = _parse_pump(data.get("pump", {}))
    tau_p = medium.tau_p_fs
    if tau_p is None:
        tau_p = 1.0 / pump.bandwidth if pump.bandwidth is not None else 500.0
    return RunConfig(
        _parse_grid(data.get("grid", {}), experiment.name, tau_p),
        medium,
        pump,
        _parse_signal(data.get("signal", {})),
        _parse_numerics(data.get("numerics", {})),
        _parse_cascade(data.get("cascade", {})),
        experiment,
        _parse_output(data.get("output", {})),
    )


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
