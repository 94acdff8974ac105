"""
Unit-tag utilities for ONQ Lab.
Resolves the `{value, unit}` pairs of scenario files through pint.

Tags containing `_2pi` denote an ordinary frequency quoted in the "2 pi x MHz" convention:
the resolved SI value is already an angular frequency (rad/s based).
"""

import math
from typing import Any, Optional, Union

import numpy as np
import pint

from utils.constants import HBAR
from utils.errors import ConfigError

UREG = pint.UnitRegistry()
Q_ = UREG.Quantity

# tag (with any _2pi marker removed) -> pint expression
UNIT_ALIASES = {
    "eV": "eV",
    "meV": "meV",
    "Hz": "Hz",
    "kHz": "kHz",
    "MHz": "MHz",
    "GHz": "GHz",
    "rad_per_s": "rad/s",
    "V_per_m": "V/m",
    "V_per_angstrom": "V/angstrom",
    "MV_per_cm": "MV/cm",
    "V_per_angstrom2": "V/angstrom**2",
    "T": "tesla",
    "m3": "m**3",
    "mm3": "mm**3",
    "um3": "um**3",
    "m2": "m**2",
    "um2": "um**2",
    "m": "m",
    "um": "um",
    "nm": "nm",
    "angstrom": "angstrom",
    "bohr": "bohr",
    "s": "s",
    "us": "us",
    "ns": "ns",
    "barn": "barn",
    "K": "kelvin",
    "mK": "millikelvin",
    "W_per_mK": "W/(m*K)",
    "m_per_W": "m/W",
    "per_m3": "1/m**3",
    "MHz_per_T": "MHz/tesla",
    "MHz_per_V_per_angstrom": "MHz/(V/angstrom)",
    "MHz_per_V2_per_angstrom2": "MHz/(V/angstrom)**2",
    "dimensionless": "dimensionless",
}

ANGULAR_MARKER = "_2pi"

Number = Union[float, np.ndarray]


def _split_tag(tag: str):
    """Return (pint expression, 2pi factor, is angular) for a unit tag."""
    if not isinstance(tag, str):
        raise ConfigError(f"unit tag must be a string, got {tag!r}")
    angular = ANGULAR_MARKER in tag
    base = tag.replace(ANGULAR_MARKER, "")
    if base not in UNIT_ALIASES:
        raise ConfigError(f"unknown unit tag '{tag}'")
    factor = 2.0 * math.pi if angular else 1.0
    return UNIT_ALIASES[base], factor, angular or base == "rad_per_s"


def is_known_tag(tag: Any) -> bool:
    """Check whether a tag can be resolved."""
    try:
        _split_tag(tag)
    except ConfigError:
        return False
    return True


def quantity(value: Any, tag: str) -> pint.Quantity:
    """
    Build a pint quantity from a value and a unit tag.

    Args:
        value: Scalar or (nested) list
        tag: Unit tag from UNIT_ALIASES, optionally with the _2pi marker

    Returns:
        pint Quantity with the 2 pi factor already applied
    """
    expression, factor, _ = _split_tag(tag)
    return Q_(np.asarray(value, dtype=float) * factor, expression)


def to_si(value: Any, tag: str, dimension: Optional[str] = None) -> Number:
    """
    Convert a tagged value to SI base units.

    Args:
        value: Scalar or (nested) list
        tag: Unit tag
        dimension: Optional pint dimensionality (e.g. "[length] ** 3") the tag must have

    Returns:
        Float for scalar input, ndarray otherwise
    """
    q = quantity(value, tag)
    if dimension is not None and not q.check(dimension):
        raise ConfigError(f"unit tag '{tag}' is not a {dimension} unit")
    magnitude = q.to_base_units().magnitude
    return _unwrap(magnitude)


def convert(value: Any, tag: str, target_tag: str) -> Number:
    """Convert a tagged value into another tag's units (2 pi markers honoured on both sides)."""
    target_expression, target_factor, _ = _split_tag(target_tag)
    q = quantity(value, tag)
    try:
        magnitude = q.to(target_expression).magnitude / target_factor
    except pint.DimensionalityError as e:
        raise ConfigError(f"cannot convert '{tag}' to '{target_tag}'") from e
    return _unwrap(magnitude)


def angular_frequency(value: Any, tag: str) -> Number:
    """
    Resolve a tagged value as an angular frequency in rad/s.

    Energies are converted with E/hbar; plain Hz-type tags are ordinary frequencies and get a
    factor 2 pi; `_2pi` and `rad_per_s` tags are already angular.
    """
    _, _, angular = _split_tag(tag)
    q = quantity(value, tag)
    if q.check("[energy]"):
        return _unwrap(q.to("J").magnitude / HBAR)
    if not q.check("1 / [time]"):
        raise ConfigError(f"unit tag '{tag}' is neither an energy nor a frequency")
    magnitude = q.to_base_units().magnitude
    if not angular:
        magnitude = magnitude * 2.0 * math.pi
    return _unwrap(magnitude)


def photon_energy_ev(value: Any, tag: str) -> Number:
    """Resolve a tagged photon energy or angular frequency as eV."""
    q = quantity(value, tag)
    if q.check("[energy]"):
        return _unwrap(q.to("eV").magnitude)
    omega = angular_frequency(value, tag)
    return _unwrap(Q_(np.asarray(omega) * HBAR, "J").to("eV").magnitude)


def _unwrap(magnitude) -> Number:
    array = np.asarray(magnitude, dtype=float)
    if array.ndim == 0:
        return float(array)
    return array
