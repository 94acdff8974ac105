"""
Nuclear species and spin models for ONQ Lab.
Represents a nucleus, the electric field gradient at its site and the derived spin quantities.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from utils.constants import BARN, MHZ_2PI
from utils.errors import InvalidArgumentError

MAX_SPIN = 4.5
TRACELESS_TOLERANCE = 1e-9
SYMMETRY_TOLERANCE = 1e-9
COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
COMPONENT_INDEX = {"xx": (0, 0), "yy": (1, 1), "zz": (2, 2), "xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}
AXES = ("x", "y", "z")


def check_spin(spin_I: float) -> float:
    """
    Validate a nuclear spin quantum number.

    Args:
        spin_I: Candidate I, a positive multiple of 1/2 up to 9/2

    Returns:
        The spin as a float
    """
    try:
        doubled = Fraction(str(spin_I)) * 2
    except (ValueError, TypeError):
        raise InvalidArgumentError(f"spin_I must be a number, got {spin_I!r}")
    if doubled.denominator != 1 or doubled < 1:
        raise InvalidArgumentError(f"spin_I must be a positive half-integer, got {spin_I}")
    if doubled > 2 * MAX_SPIN:
        raise InvalidArgumentError(f"spin_I above {MAX_SPIN} is not supported, got {spin_I}")
    return float(doubled) / 2.0


def _frozen_array(values, shape: Tuple[int, ...], name: str, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    if array.shape != shape:
        raise InvalidArgumentError(f"{name} must have shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{name} must be finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NuclearSpecies:
    """A nuclide with the data entering the quadrupole and Zeeman terms.

    quadrupole_moment is stored in m^2 and gyromagnetic_ratio in rad s^-1 T^-1.
    """

    label: str
    spin_I: float
    quadrupole_moment: float
    gyromagnetic_ratio: float

    def __post_init__(self):
        object.__setattr__(self, "spin_I", check_spin(self.spin_I))
        for name in ("quadrupole_moment", "gyromagnetic_ratio"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} of {self.label} must be finite")

    @classmethod
    def from_table_units(cls, label: str, spin_I: float, quadrupole_moment_barn: float,
                         gyromagnetic_2pi_mhz_per_t: float) -> "NuclearSpecies":
        """
        Create a species from nuclide-table units.

        Args:
            label: Nuclide label, e.g. "Ga69"
            spin_I: Nuclear spin
            quadrupole_moment_barn: q in barn (may be negative)
            gyromagnetic_2pi_mhz_per_t: g_m in 2pi MHz/T

        Returns:
            NuclearSpecies in SI units
        """
        return cls(
            label=label,
            spin_I=spin_I,
            quadrupole_moment=float(quadrupole_moment_barn) * BARN,
            gyromagnetic_ratio=float(gyromagnetic_2pi_mhz_per_t) * MHZ_2PI,
        )

    @property
    def dim(self) -> int:
        return int(round(2 * self.spin_I)) + 1

    @property
    def has_quadrupole(self) -> bool:
        return self.spin_I > 0.5

    @property
    def quadrupole_moment_barn(self) -> float:
        return self.quadrupole_moment / BARN

    @property
    def gyromagnetic_2pi_mhz_per_t(self) -> float:
        return self.gyromagnetic_ratio / MHZ_2PI

    def to_dict(self) -> Dict:
        """Convert to table units for serialization."""
        return {
            "label": self.label,
            "spin_I": self.spin_I,
            "quadrupole_moment_barn": self.quadrupole_moment_barn,
            "gyromagnetic_2pi_MHz_per_T": self.gyromagnetic_2pi_mhz_per_t,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NuclearSpecies":
        """Create from a dictionary written by to_dict."""
        return cls.from_table_units(
            data["label"], data["spin_I"],
            data["quadrupole_moment_barn"], data["gyromagnetic_2pi_MHz_per_T"],
        )


@dataclass(frozen=True, eq=False)
class EfgTensor:
    """Symmetric traceless electric field gradient at a nuclear site, in V/A^2."""

    v: np.ndarray

    def __post_init__(self):
        array = np.array(self.v, dtype=float)
        if array.shape != (3, 3):
            raise InvalidArgumentError(f"EFG tensor must be 3x3, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InvalidArgumentError("EFG tensor must be finite")
        scale = np.max(np.abs(array))
        if np.max(np.abs(array - array.T)) > SYMMETRY_TOLERANCE * scale:
            raise InvalidArgumentError("EFG tensor must be symmetric")
        array = 0.5 * (array + array.T)
        if abs(np.trace(array)) > TRACELESS_TOLERANCE * scale:
            raise InvalidArgumentError(f"EFG tensor must be traceless, trace = {np.trace(array):.3e}")
        array.setflags(write=False)
        object.__setattr__(self, "v", array)

    @classmethod
    def zero(cls) -> "EfgTensor":
        return cls(np.zeros((3, 3)))

    @classmethod
    def axial(cls, vzz: float) -> "EfgTensor":
        """Axially symmetric EFG, V_xx = V_yy = -V_zz/2 (wurtzite c-axis along z)."""
        return cls(np.diag([-vzz / 2.0, -vzz / 2.0, vzz]))

    @classmethod
    def from_components(cls, components: Dict[str, float]) -> "EfgTensor":
        """Build from the six independent components keyed "xx", "yy", "zz", "xy", "xz", "yz"."""
        array = np.zeros((3, 3))
        for name, value in components.items():
            if name not in COMPONENT_INDEX:
                raise InvalidArgumentError(f"unknown EFG component '{name}'")
            i, j = COMPONENT_INDEX[name]
            array[i, j] = array[j, i] = value
        return cls(array)

    def components(self) -> Dict[str, float]:
        return {name: float(self.v[i, j]) for name, (i, j) in COMPONENT_INDEX.items()}

    def rotated(self, rotation: np.ndarray) -> "EfgTensor":
        """Return R V R^T."""
        rotation = np.asarray(rotation, dtype=float)
        return EfgTensor(rotation @ self.v @ rotation.T)

    def __eq__(self, other):
        return isinstance(other, EfgTensor) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash(self.v.tobytes())


@dataclass(frozen=True, eq=False)
class QuadrupoleTensor:
    """Quadrupole coupling tensor Q_ij in rad/s."""

    q: np.ndarray

    def __post_init__(self):
        array = _frozen_array(self.q, (3, 3), "quadrupole tensor")
        if not np.allclose(array, array.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(array)))):
            raise InvalidArgumentError("quadrupole tensor must be symmetric")
        object.__setattr__(self, "q", array)

    @classmethod
    def zero(cls) -> "QuadrupoleTensor":
        return cls(np.zeros((3, 3)))

    @property
    def in_2pi_mhz(self) -> np.ndarray:
        return self.q / MHZ_2PI


@dataclass(frozen=True, eq=False)
class SpinOperators:
    """Angular momentum matrices (hbar = 1) in the basis m = I, I-1, ..., -I."""

    spin_I: float
    ix: np.ndarray
    iy: np.ndarray
    iz: np.ndarray

    @property
    def dim(self) -> int:
        return self.iz.shape[0]

    @property
    def cartesian(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.ix, self.iy, self.iz

    def symmetrized_product(self, i: int, j: int) -> np.ndarray:
        """(I_i I_j + I_j I_i)/2."""
        a, b = self.cartesian[i], self.cartesian[j]
        return 0.5 * (a @ b + b @ a)


@dataclass(frozen=True, eq=False)
class SpinLevelStructure:
    """Eigen-decomposition of a spin Hamiltonian.

    energies are ascending angular frequencies (rad/s); eigenstates holds orthonormal columns.
    """

    energies: np.ndarray
    eigenstates: np.ndarray
    degeneracy_tolerance: float = field(default=1e-9)

    def level_groups(self) -> Tuple[Tuple[int, ...], ...]:
        """Indices of eigenstates grouped into degenerate levels."""
        scale = max(1.0, float(np.max(np.abs(self.energies))))
        groups = [[0]]
        for k in range(1, len(self.energies)):
            if self.energies[k] - self.energies[groups[-1][0]] <= self.degeneracy_tolerance * scale:
                groups[-1].append(k)
            else:
                groups.append([k])
        return tuple(tuple(g) for g in groups)

    def distinct_levels(self) -> np.ndarray:
        return np.array([self.energies[g[0]] for g in self.level_groups()])

    @property
    def delta_ge(self) -> float:
        """Splitting between the lowest two distinct levels, rad/s (0 when fully degenerate)."""
        levels = self.distinct_levels()
        if len(levels) < 2:
            return 0.0
        return float(levels[1] - levels[0])

    def state(self, index: int) -> np.ndarray:
        return self.eigenstates[:, index]

    @property
    def ground_index(self) -> int:
        return 0

    @property
    def excited_index(self) -> Optional[int]:
        """First eigenstate of the second distinct level."""
        groups = self.level_groups()
        return groups[1][0] if len(groups) > 1 else None

    def to_dict(self) -> Dict:
        return {
            "energies_2pi_MHz": [float(e) / MHZ_2PI for e in self.energies],
            "distinct_levels_2pi_MHz": [float(e) / MHZ_2PI for e in self.distinct_levels()],
            "delta_ge_Hz": self.delta_ge / (2 * np.pi),
        }
