"""Configuration loader for the parametric CSI feedback simulator.

Settings live in four frozen dataclasses: :class:`ScenarioConfig`,
:class:`ModelConfig`, :class:`TrainConfig` and :class:`LinkSimConfig`. A
dotenv-style ``key=value`` file can override any field by its lower-case
name, and every field is also exposed as a ``--field-name`` CLI flag, which in
turn overrides the file. Sequences are written comma separated, e.g.
``snr_db=0,5,10``.

The following environment variables are recognised (none is required):

  CSI_SIM_CONFIG:     Default config file used when no ``--config`` flag is
                      given.
  CSI_SIM_LOG_LEVEL:  Logging level name for the CLI. Defaults to 'INFO'.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values, load_dotenv

# Load .env file if present. It will not override existing environment
# variables.
load_dotenv()

CONFIG_PATH: str | None = os.environ.get("CSI_SIM_CONFIG") or None
LOG_LEVEL: str = os.environ.get("CSI_SIM_LOG_LEVEL", "INFO").upper()

SPEED_OF_LIGHT = 299_792_458.0
MAX_PATHS = 10


class ConfigError(ValueError):
    """Raised when a configuration value is missing, unknown or out of range."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical constants and dimensions of one simulated cell.

    ``antenna_spacing_m`` left as ``None`` resolves to half a wavelength.
    Path gains are drawn from ``Unif[0, beta_scale * beta_max]`` while the
    feedback codebook always spans ``[0, beta_max]``.
    """

    n_tx: int = 8
    n_subcarriers: int = 32
    carrier_freq_hz: float = 28e9
    bandwidth_hz: float = 100e6
    antenna_spacing_m: float | None = None
    tau_max_s: float = 100e-9
    beta_max: float = 1.0
    n_paths: int = 3
    ue_speed_mps: float = 3.0 / 3.6
    slot_period_s: float = 10e-3
    window_len: int = 8
    rng_seed: int = 0
    beta_scale: float = 1.0
    min_distance_m: float = 10.0
    max_distance_m: float = 500.0

    def __post_init__(self) -> None:
        _require(self.n_tx >= 1, f"n_tx must be >= 1, got {self.n_tx}")
        _require(self.n_subcarriers >= 1, f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        _require(
            1 <= self.n_paths <= MAX_PATHS,
            f"n_paths must lie in [1, {MAX_PATHS}], got {self.n_paths}",
        )
        _require(self.carrier_freq_hz > 0, "carrier_freq_hz must be positive")
        _require(
            0 < self.bandwidth_hz < self.carrier_freq_hz,
            f"bandwidth_hz must lie in (0, carrier_freq_hz), got {self.bandwidth_hz}",
        )
        if self.antenna_spacing_m is None:
            object.__setattr__(self, "antenna_spacing_m", self.wavelength_m / 2)
        _require(self.antenna_spacing_m > 0, "antenna_spacing_m must be positive")
        _require(self.tau_max_s > 0, "tau_max_s must be positive")
        _require(self.beta_max > 0, "beta_max must be positive")
        _require(self.ue_speed_mps >= 0, "ue_speed_mps must be non-negative")
        _require(self.slot_period_s > 0, "slot_period_s must be positive")
        _require(self.window_len >= 0, "window_len must be non-negative")
        _require(0 < self.beta_scale <= 1, f"beta_scale must lie in (0, 1], got {self.beta_scale}")
        _require(
            0 < self.min_distance_m <= self.max_distance_m,
            "distance range must satisfy 0 < min_distance_m <= max_distance_m",
        )

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions of the attention encoder and decoder."""

    d_model: int = 64
    n_heads: int = 4
    n_truncated: int = 32
    hidden_factor: int = 4
    slot_embedding: bool = True
    conv_kernel: int = 3
    ln_eps: float = 1e-5

    def __post_init__(self) -> None:
        _require(self.d_model >= 1 and self.n_heads >= 1, "d_model and n_heads must be positive")
        _require(
            self.d_model % self.n_heads == 0,
            f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})",
        )
        _require(self.n_truncated >= 1, "n_truncated must be >= 1")
        _require(self.hidden_factor >= 1, "hidden_factor must be >= 1")
        _require(self.conv_kernel >= 1 and self.conv_kernel % 2 == 1, "conv_kernel must be odd")
        _require(self.ln_eps > 0, "ln_eps must be positive")


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation and dataset settings.

    A zero ``learning_rate`` is accepted and freezes all weights.
    """

    batch_size: int = 16
    learning_rate: float = 0.002
    epochs: int = 100
    decay_period: int = 50
    decay_factor: float = 0.1
    seed: int = 0
    joint_backprop: bool = False
    total_bits: int = 32
    allocation_method: str = "closed"
    n_train: int = 2000
    n_val: int = 500
    n_test: int = 500

    def __post_init__(self) -> None:
        _require(self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}")
        _require(
            self.learning_rate >= 0 and math.isfinite(self.learning_rate),
            f"learning_rate must be finite and non-negative, got {self.learning_rate}",
        )
        _require(self.epochs >= 1, "epochs must be >= 1")
        _require(self.decay_period >= 1, "decay_period must be >= 1")
        _require(0 < self.decay_factor <= 1, "decay_factor must lie in (0, 1]")
        _require(self.total_bits >= 0, "total_bits must be non-negative")
        _require(
            min(self.n_train, self.n_val, self.n_test) >= 0,
            "dataset split sizes must be non-negative",
        )


@dataclass(frozen=True)
class LinkSimConfig:
    """Link-level BER settings."""

    modulation: str = "qpsk"
    symbols_per_subcarrier: int = 256
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    beamformer: str = "mrt"

    def __post_init__(self) -> None:
        _require(self.modulation == "qpsk", f"unsupported modulation {self.modulation!r}")
        _require(self.beamformer == "mrt", f"unsupported beamformer {self.beamformer!r}")
        _require(self.symbols_per_subcarrier >= 1, "symbols_per_subcarrier must be >= 1")
        _require(len(self.snr_db) > 0, "snr_db grid must not be empty")


@dataclass(frozen=True)
class Settings:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    link: LinkSimConfig = field(default_factory=LinkSimConfig)

    def as_dict(self) -> dict[str, dict[str, Any]]:
        return dataclasses.asdict(self)


SECTIONS: dict[str, type] = {
    "scenario": ScenarioConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "link": LinkSimConfig,
}


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


def _parse_value(hint: Any, raw: str) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if hint is bool:
        return _parse_bool(raw)
    if hint in (int, float, str):
        return hint(raw.strip())
    if origin is tuple:
        return tuple(args[0](part.strip()) for part in raw.split(",") if part.strip())
    if origin in (typing.Union, types.UnionType):
        if raw.strip().lower() in ("", "none"):
            return None
        inner = [a for a in args if a is not type(None)]
        return _parse_value(inner[0], raw)
    raise ConfigError(f"unsupported field type {hint!r}")


def coerce_fields(cls: type, values: Mapping[str, Any]) -> dict[str, Any]:
    """Convert raw string values to the types declared on ``cls``.

    Non-string values pass through unchanged.
    """
    hints = typing.get_type_hints(cls)
    out: dict[str, Any] = {}
    for name, raw in values.items():
        if not isinstance(raw, str):
            out[name] = raw
            continue
        try:
            out[name] = _parse_value(hints[name], raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid value for {name}: {raw!r} ({e})") from e
    return out


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read a key-value config file into a dict of raw strings."""
    path = Path(path).expanduser()
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {k.strip().lower(): (v if v is not None else "") for k, v in values.items()}


def load_settings(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> Settings:
    """Build :class:`Settings` from defaults, a config file and overrides.

    Args:
        path: Config file. Falls back to ``CSI_SIM_CONFIG`` when omitted.
        overrides: Field values taking precedence over the file, keyed by
            field name.
    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    raw: dict[str, Any] = {}
    path = path or CONFIG_PATH
    if path:
        raw.update(read_config_file(path))
    raw.update(overrides or {})

    sections: dict[str, Any] = {}
    claimed: set[str] = set()
    for section, cls in SECTIONS.items():
        names = {f.name for f in dataclasses.fields(cls)}
        picked = {k: v for k, v in raw.items() if k in names}
        claimed.update(picked)
        sections[section] = cls(**coerce_fields(cls, picked))
    unknown = sorted(set(raw) - claimed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return Settings(**sections)


def add_config_arguments(parser: argparse.ArgumentParser, *classes: type) -> None:
    """Expose every field of ``classes`` as a ``--field-name`` flag.

    Flags default to :data:`argparse.SUPPRESS` so that only values given on
    the command line end up in the namespace. The registered names are kept
    on the parser so that command-local flags sharing a field name are not
    mistaken for overrides.
    """
    registered = list(parser.get_default("config_fields") or ())
    for cls in classes:
        group = parser.add_argument_group(cls.__name__)
        for f in dataclasses.fields(cls):
            group.add_argument(
                "--" + f.name.replace("_", "-"),
                dest=f.name,
                default=argparse.SUPPRESS,
                metavar=f.name.upper(),
                help=f"override {f.name} (default: {f.default!r})"
                if f.default is not dataclasses.MISSING
                else f"override {f.name}",
            )
            registered.append(f.name)
    parser.set_defaults(config_fields=tuple(registered))


def config_overrides(namespace: argparse.Namespace) -> dict[str, Any]:
    """Collect the config-field flags present in a parsed namespace."""
    names = set(getattr(namespace, "config_fields", ()))
    return {k: v for k, v in vars(namespace).items() if k in names}
