"""Experiment configuration files.

A configuration is a TOML document with the sections ``model``, ``ansatz``,
``evolution`` and ``output``. Every key is optional; missing keys fall back to
:data:`DEFAULTS`. Unknown sections and keys are rejected.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import pathlib
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Callable, Mapping
from typing import Any, Literal

import tabb
import tomli_w

from ovqite.evolution import EvolutionConfig
from ovqite.exceptions import ConfigError, reraise_as
from ovqite.tfim import TfimParams
from ovqite.utils import stable_hash

OutputFormat = Literal["csv", "json"]


@dataclasses.dataclass(frozen=True, slots=True)
class AnsatzConfig:
    layers: int = 5

    def __post_init__(self) -> None:
        if self.layers < 0:
            msg = f"Number of layers must be non-negative, got {self.layers}."
            raise ConfigError(msg)


@dataclasses.dataclass(frozen=True, slots=True)
class OutputConfig:
    path: str = "trajectory.csv"
    format: OutputFormat = "csv"

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ConfigError(f"Unknown output format {self.format!r}.")
        if not self.path:
            raise ConfigError("The output path must not be empty.")


def _integer(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"expected an integer, got {value!r}")
    return value


def _real(value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise TypeError(f"expected a number, got {value!r}")
    return float(value)


def _boolean(value: object) -> bool:
    if not isinstance(value, bool):
        raise TypeError(f"expected true or false, got {value!r}")
    return value


def _text(value: object) -> str:
    if not isinstance(value, str):
        raise TypeError(f"expected a string, got {value!r}")
    return value


def _strings(value: object) -> tuple[str, ...]:
    if not isinstance(value, list | tuple):
        raise TypeError(f"expected a list of strings, got {value!r}")
    return tuple(_text(item) for item in value)


Coercer = Callable[[object], Any]

SCHEMA: dict[str, dict[str, Coercer]] = {
    "model": {"n": _integer, "J": _real, "h": _real, "periodic": _boolean},
    "ansatz": {"layers": _integer},
    "evolution": {
        "algorithm": _text,
        "operator_set": _text,
        "operators": _strings,
        "delta": _real,
        "steps": _integer,
        "mode": _text,
        "shots": _integer,
        "rcond": _real,
        "solver": _text,
        "strategy": _text,
        "seed": _integer,
        "workers": _integer,
        "eiv_lambda": _real,
        "eiv_max_iters": _integer,
        "eiv_tol": _real,
        "eiv_floor": _real,
    },
    "output": {"path": _text, "format": _text},
}

#: Values used for keys missing from a configuration file. ``rcond`` has no
#: entry: without it the cutoff is chosen per algorithm, operator set and mode.
DEFAULTS: dict[str, dict[str, object]] = {
    "model": {"n": 10, "J": 1.0, "h": 0.5, "periodic": True},
    "ansatz": {"layers": 5},
    "evolution": {
        "algorithm": "ovqite",
        "operator_set": "S_H",
        "operators": [],
        "delta": 0.02,
        "steps": 150,
        "mode": "exact",
        "shots": 10_000,
        "solver": "pinv",
        "strategy": "grouped",
        "seed": 0,
        "workers": 1,
        "eiv_lambda": math.inf,
        "eiv_max_iters": 500,
        "eiv_tol": 1e-8,
        "eiv_floor": 1e-10,
    },
    "output": {"path": "trajectory.csv", "format": "csv"},
}


@dataclasses.dataclass(frozen=True, slots=True)
class ExperimentConfig:
    model: TfimParams = dataclasses.field(default_factory=TfimParams)
    ansatz: AnsatzConfig = dataclasses.field(default_factory=AnsatzConfig)
    evolution: EvolutionConfig = dataclasses.field(default_factory=EvolutionConfig)
    output: OutputConfig = dataclasses.field(default_factory=OutputConfig)

    @property
    def seed(self) -> int:
        return self.evolution.seed

    def to_mapping(self) -> dict[str, dict[str, object]]:
        """Plain TOML-compatible data; unset values are left out."""
        data: dict[str, dict[str, object]] = {}

        for section in SCHEMA:
            values = dataclasses.asdict(getattr(self, section))
            data[section] = {key: _plain(values[key]) for key in SCHEMA[section]}
            data[section] = {k: v for k, v in data[section].items() if v is not None}

        if not data["evolution"]["operators"]:
            del data["evolution"]["operators"]

        return data

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_mapping())

    def dump(self, path: str | pathlib.Path) -> None:
        with reraise_as(ConfigError, OSError, prefix=f"Cannot write {path}"):
            pathlib.Path(path).write_text(self.to_toml(), encoding="utf-8")

    def config_hash(self) -> str:
        return stable_hash(self.to_mapping())

    def with_overrides(self, overrides: Mapping[str, object]) -> ExperimentConfig:
        """Replaces values addressed as ``section.key``.

        For example ``cfg.with_overrides({"evolution.seed": 3})``.
        """
        sections: dict[str, dict[str, object]] = {}

        for path, value in overrides.items():
            section, _, key = path.partition(".")
            _check_key(section, key)
            sections.setdefault(section, {})[key] = value

        changes = {}
        for section, values in sections.items():
            current = dataclasses.asdict(getattr(self, section))
            changes[section] = _build(section, current | values)

        return dataclasses.replace(self, **changes)


def _plain(value: object) -> object:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return list(value)
    return value


def _check_key(section: str, key: str) -> None:
    if section not in SCHEMA:
        raise ConfigError(f"Unknown config section [{section}].")
    if key not in SCHEMA[section]:
        raise ConfigError(f"Unknown config key {key!r} in [{section}].")


def _build(section: str, values: Mapping[str, object]) -> Any:
    factories: dict[str, Callable[..., Any]] = {
        "model": TfimParams,
        "ansatz": AnsatzConfig,
        "evolution": EvolutionConfig,
        "output": OutputConfig,
    }
    schema = SCHEMA[section]

    with reraise_as(ConfigError, TypeError, ValueError, prefix=f"Invalid [{section}]"):
        kwargs = {
            key: schema[key](value)
            for key, value in values.items()
            if value is not None
        }
        return factories[section](**kwargs)


def parse_config(data: Mapping[str, object]) -> ExperimentConfig:
    """Validates ``data`` layered over :data:`DEFAULTS`."""
    tables: dict[str, Mapping[str, object]] = {}

    for section, values in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"Unknown config section [{section}].")
        if not isinstance(values, Mapping):
            raise ConfigError(f"Config section [{section}] must be a table.")
        for key in values:
            _check_key(section, key)
        tables[section] = values

    sections = {}
    for section in SCHEMA:
        layered = tabb.Config(DEFAULTS[section], tables.get(section, {}))
        sections[section] = _build(section, {key: layered[key] for key in layered})

    return ExperimentConfig(**sections)


def load_config(path: str | pathlib.Path) -> ExperimentConfig:
    errors = (OSError, tomllib.TOMLDecodeError)
    with reraise_as(ConfigError, *errors, prefix=f"Cannot read {path}"):
        data = tomllib.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    return parse_config(data)
