"""
Scenario configuration for ONQ Lab.
Loads, validates and saves the TOML scenario files that drive every command.
"""

import copy
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from utils import units
from utils.errors import ConfigError, DataFileError

QUANTITY = "quantity"
NUMBER = (int, float)
KINDS = ("spin", "tensors", "simulate", "feasibility")

_CAVITY_OPTICAL = {
    "photon_energy": QUANTITY,
    "kappa": QUANTITY,
    "quality_factor": NUMBER,
    "mode_volume": QUANTITY,
    "relative_permittivity": NUMBER,
}

_CAVITY_MW = {
    "frequency": QUANTITY,
    "kappa": QUANTITY,
    "quality_factor": NUMBER,
    "mode_volume": QUANTITY,
    "relative_permeability": NUMBER,
}

_ENSEMBLE = {"size_N": NUMBER, "density": QUANTITY}

SCHEMA: Dict[str, Any] = {
    "scenario": {"name": str, "kind": str, "description": str},
    "species": {
        "label": str,
        "nuclide_table": str,
        "spin_I": NUMBER,
        "quadrupole_moment": QUANTITY,
        "gyromagnetic_ratio": QUANTITY,
    },
    "spin": {"efg": QUANTITY, "axial_vzz": QUANTITY, "b_field": QUANTITY},
    "tensors": {
        "series": str,
        "fit_order": int,
        "mirror_axis": str,
        "level_model": str,
        "omega1": QUANTITY,
        "omega2": QUANTITY,
        "e_gap": QUANTITY,
        "omega_pump": QUANTITY,
        "a0": QUANTITY,
        "closed_form": [{
            "system": str,
            "species": str,
            "order": int,
            "e_gap": QUANTITY,
            "omega_pump": QUANTITY,
            "a0": QUANTITY,
            "reference_value": NUMBER,
        }],
    },
    "transduction": {
        "direction": str,
        "mode": str,
        "truncation": int,
        "G_o": QUANTITY,
        "G_m": QUANTITY,
        "gamma_n": QUANTITY,
        "delta": QUANTITY,
        "stage_durations": QUANTITY,
        "pump_field": QUANTITY,
        "d_effective": QUANTITY,
        "g_m": QUANTITY,
        "optical": _CAVITY_OPTICAL,
        "microwave": _CAVITY_MW,
        "ensemble": _ENSEMBLE,
    },
    "feasibility": {
        "heating_threshold": QUANTITY,
        "keldysh_threshold": NUMBER,
        "keldysh_exponent": str,
        "material": {
            "bandgap": QUANTITY,
            "two_photon_beta": QUANTITY,
            "thermal_conductivity": QUANTITY,
            "refractive_index": NUMBER,
            "relative_permittivity": NUMBER,
            "effective_mass_ratio": NUMBER,
        },
        "laser": {"amplitude": QUANTITY, "photon_energy": QUANTITY, "linewidth": QUANTITY},
        "geometry": {"depth": QUANTITY, "transverse_area": QUANTITY},
        "readout": {
            "d_effective": QUANTITY,
            "pump_field": QUANTITY,
            "photon_energy": QUANTITY,
            "relative_permittivity": NUMBER,
            "mode_volume": QUANTITY,
            "quality_factor": NUMBER,
        },
        "dispersive": {
            "G": QUANTITY,
            "d_effective": QUANTITY,
            "pump_field": QUANTITY,
            "photon_energy": QUANTITY,
            "relative_permittivity": NUMBER,
            "mode_volume": QUANTITY,
            "ensemble": _ENSEMBLE,
            "delta": QUANTITY,
            "anharmonicity": QUANTITY,
        },
        "rabi": {
            "f_rabi": QUANTITY,
            "detune": QUANTITY,
            "kappa1": QUANTITY,
            "kappa2": QUANTITY,
            "threshold": NUMBER,
        },
        "suppression": {"delta_GE": QUANTITY, "kappa_o": QUANTITY},
    },
    "integrator": {"dt": QUANTITY, "stride": int},
    "sweep": {
        "parameter": str,
        "values": QUANTITY,
        "range": {"min": NUMBER, "max": NUMBER, "count": int, "spacing": str, "unit": str},
    },
    "output": {"trajectory": str, "summary": str, "report": str, "sweep": str},
}

_MISSING = object()


def _locate(text: Optional[str], key: str) -> Optional[int]:
    """Best-effort line number of the last component of a dotted key."""
    if not text:
        return None
    name = re.escape(key.split(".")[-1].split("[")[0])
    pattern = re.compile(rf"^\s*(\[+\s*[\w.]*\b{name}\s*\]+|{name}\s*=|.*[{{,]\s*{name}\s*=)")
    for number, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return number
    return None


def _type_name(expected) -> str:
    if expected == QUANTITY:
        return "{value, unit} quantity"
    if expected == NUMBER:
        return "number"
    if isinstance(expected, dict):
        return "table"
    if isinstance(expected, list):
        return "array of tables"
    return expected.__name__


def _validate(value: Any, schema: Any, key: str, text: Optional[str]):
    """Recursively check a parsed value against its schema entry."""
    def fail(message: str):
        raise ConfigError(message, key=key, line=_locate(text, key))

    if isinstance(schema, dict):
        if not isinstance(value, dict):
            fail(f"expected a table, got {type(value).__name__}")
        for name, item in value.items():
            child = f"{key}.{name}" if key else name
            if name not in schema:
                raise ConfigError(f"unknown key '{name}'", key=child, line=_locate(text, child))
            _validate(item, schema[name], child, text)
    elif isinstance(schema, list):
        if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
            fail("expected an array of tables")
        for index, item in enumerate(value):
            _validate(item, schema[0], f"{key}[{index}]", text)
    elif schema == QUANTITY:
        if not isinstance(value, dict) or set(value) != {"value", "unit"}:
            fail("expected a {value = ..., unit = \"...\"} quantity")
        if not units.is_known_tag(value["unit"]):
            fail(f"unknown unit tag '{value['unit']}'")
        try:
            array = np.asarray(value["value"], dtype=float)
        except (TypeError, ValueError):
            fail("quantity value must be a number or a list of numbers")
        if not np.all(np.isfinite(array)):
            fail("quantity value must be finite")
    elif schema == NUMBER:
        if isinstance(value, bool) or not isinstance(value, NUMBER):
            fail(f"expected a number, got {type(value).__name__}")
    elif schema is int:
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"expected an integer, got {type(value).__name__}")
    elif not isinstance(value, schema):
        fail(f"expected {_type_name(schema)}, got {type(value).__name__}")


def _schema_at(path: str) -> Any:
    schema: Any = SCHEMA
    for part in path.split("."):
        if not isinstance(schema, dict) or part not in schema:
            raise ConfigError("parameter path does not resolve", key=path)
        schema = schema[part]
    return schema


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """A validated scenario.

    data is the parsed TOML mapping; source is the file it came from (relative paths inside
    the scenario resolve against its directory).
    """

    data: Dict[str, Any]
    source: Optional[str] = None
    text: Optional[str] = field(default=None, repr=False)

    def __post_init__(self):
        _validate(self.data, SCHEMA, "", self.text)
        if "scenario" not in self.data or "name" not in self.data["scenario"]:
            raise ConfigError("missing scenario.name", key="scenario.name")
        kind = self.data["scenario"].get("kind")
        if kind not in KINDS:
            raise ConfigError(f"scenario.kind must be one of {', '.join(KINDS)}", key="scenario.kind",
                              line=_locate(self.text, "scenario.kind"))
        self._check_units()

    def _check_units(self):
        """Resolve every quantity once so bad dimensions fail at load time."""
        def walk(value, schema, key):
            if isinstance(schema, dict) and isinstance(value, dict):
                for name, item in value.items():
                    walk(item, schema[name], f"{key}.{name}" if key else name)
            elif isinstance(schema, list):
                for index, item in enumerate(value):
                    walk(item, schema[0], f"{key}[{index}]")
            elif schema == QUANTITY:
                try:
                    units.to_si(value["value"], value["unit"])
                except ConfigError as e:
                    raise ConfigError(str(e), key=key, line=_locate(self.text, key)) from e
        walk(self.data, SCHEMA, "")

    @property
    def name(self) -> str:
        return self.data["scenario"]["name"]

    @property
    def kind(self) -> str:
        return self.data["scenario"]["kind"]

    def has(self, path: str) -> bool:
        return self.get(path, _MISSING) is not _MISSING

    def get(self, path: str, default: Any = _MISSING) -> Any:
        """Value at a dotted path; raises ConfigError when missing and no default is given."""
        node: Any = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is _MISSING:
                    raise ConfigError("missing required key", key=path)
                return default
            node = node[part]
        return node

    def _quantity(self, path: str) -> Dict[str, Any]:
        value = self.get(path)
        if not isinstance(value, dict) or "unit" not in value:
            raise ConfigError("expected a quantity", key=path)
        return value

    def si(self, path: str, dimension: Optional[str] = None, default: Any = _MISSING):
        """Quantity at path in SI base units."""
        if default is not _MISSING and not self.has(path):
            return default
        q = self._quantity(path)
        try:
            return units.to_si(q["value"], q["unit"], dimension)
        except ConfigError as e:
            raise ConfigError(str(e), key=path, line=_locate(self.text, path)) from e

    def angular(self, path: str, default: Any = _MISSING):
        """Quantity at path as an angular frequency in rad/s (energies via E/hbar)."""
        if default is not _MISSING and not self.has(path):
            return default
        q = self._quantity(path)
        try:
            return units.angular_frequency(q["value"], q["unit"])
        except ConfigError as e:
            raise ConfigError(str(e), key=path, line=_locate(self.text, path)) from e

    def convert(self, path: str, target_tag: str, default: Any = _MISSING):
        """Quantity at path expressed in another unit tag."""
        if default is not _MISSING and not self.has(path):
            return default
        q = self._quantity(path)
        try:
            return units.convert(q["value"], q["unit"], target_tag)
        except ConfigError as e:
            raise ConfigError(str(e), key=path, line=_locate(self.text, path)) from e

    def resolve_path(self, relative: str) -> str:
        """Resolve a file path written in the scenario."""
        if os.path.isabs(relative) or self.source is None:
            return relative
        return os.path.join(os.path.dirname(os.path.abspath(self.source)), relative)

    def with_value(self, path: str, value: Any) -> "ScenarioConfig":
        """Copy with the value at a dotted path replaced (intermediate tables are created)."""
        _schema_at(path)
        data = copy.deepcopy(self.data)
        node = data
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        return ScenarioConfig(data, self.source)

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.data)


@dataclass(frozen=True)
class SweepSpec:
    """A parameter path and the values it takes, each a {value, unit} pair."""

    parameter: str
    values: List[float]
    unit: str

    def __post_init__(self):
        schema = _schema_at(self.parameter)
        if schema != QUANTITY:
            raise ConfigError("sweep parameter must name a quantity", key=self.parameter)
        if not units.is_known_tag(self.unit):
            raise ConfigError(f"unknown unit tag '{self.unit}'", key="sweep")
        if not self.values:
            raise ConfigError("sweep has no values", key="sweep")

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "SweepSpec":
        """
        Build from the [sweep] table.

        Either `values = {value = [...], unit = ...}` or
        `range = {min, max, count, spacing = "linear"|"log", unit}`.
        """
        if not config.has("sweep"):
            raise ConfigError("scenario has no [sweep] table", key="sweep")
        parameter = config.get("sweep.parameter")
        if config.has("sweep.values"):
            q = config.get("sweep.values")
            return cls(parameter, [float(v) for v in np.atleast_1d(q["value"])], q["unit"])
        if not config.has("sweep.range"):
            raise ConfigError("sweep needs 'values' or 'range'", key="sweep")
        r = config.get("sweep.range")
        for name in ("min", "max", "count", "unit"):
            if name not in r:
                raise ConfigError("missing required key", key=f"sweep.range.{name}")
        count = r["count"]
        if count < 2:
            raise ConfigError("sweep range count must be >= 2", key="sweep.range.count")
        spacing = r.get("spacing", "linear")
        if spacing == "log":
            if r["min"] <= 0 or r["max"] <= 0:
                raise ConfigError("log sweep bounds must be positive", key="sweep.range")
            values = np.geomspace(r["min"], r["max"], count)
        elif spacing == "linear":
            values = np.linspace(r["min"], r["max"], count)
        else:
            raise ConfigError("spacing must be 'linear' or 'log'", key="sweep.range.spacing")
        return cls(parameter, [float(v) for v in values], r["unit"])

    def points(self) -> List[Dict[str, Any]]:
        return [{"value": v, "unit": self.unit} for v in self.values]

    def apply(self, config: ScenarioConfig) -> List[ScenarioConfig]:
        """One scenario per sweep value, in order."""
        return [config.with_value(self.parameter, point) for point in self.points()]


def parse_scenario(text: str, source: Optional[str] = None) -> ScenarioConfig:
    """Parse TOML text into a ScenarioConfig."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}") from e
    return ScenarioConfig(data, source, text)


def load_scenario(path: str) -> ScenarioConfig:
    """
    Load a scenario file.

    Args:
        path: TOML file

    Returns:
        ScenarioConfig
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise DataFileError(e.strerror or "cannot read file", path=path) from e
    return parse_scenario(text, path)


def save_scenario(config: ScenarioConfig, path: str):
    """Write a scenario back out as TOML."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as f:
        tomli_w.dump(config.to_dict(), f)


def list_scenarios(directory: str) -> List[str]:
    """Scenario files in a directory, sorted by name."""
    return sorted(
        os.path.join(directory, name) for name in os.listdir(directory) if name.endswith(".toml")
    )
