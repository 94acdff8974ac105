"""
Response tensor models for ONQ Lab.
Represents electronic level models, the NER (C) and ONQ (D) tensors and EFG-vs-field series.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from models.species import AXES, COMPONENT_INDEX, COMPONENTS, EfgTensor, NuclearSpecies
from utils.errors import InvalidArgumentError

DEFAULT_LINEWIDTH_EV = 1e-3
HERMITIAN_TOLERANCE = 1e-10


def _hermitian(matrix: np.ndarray) -> bool:
    return np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= HERMITIAN_TOLERANCE


def _unit_vector(vector: Sequence[float]) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    if v.shape != (3,) or np.linalg.norm(v) == 0.0:
        raise InvalidArgumentError(f"polarization must be a nonzero 3-vector, got {vector}")
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class ElectronicLevelModel:
    """Single-particle electronic levels feeding the sum-over-states estimators.

    energies in eV, occupations in [0, 1], dipole[p] = [r_p]_mn in A,
    efg_me[i, j] = [V_ij]_mn in V/A^2, linewidth_eta in eV.
    """

    energies: np.ndarray
    occupations: np.ndarray
    dipole: np.ndarray
    efg_me: np.ndarray
    linewidth_eta: float = DEFAULT_LINEWIDTH_EV

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float)
        occupations = np.array(self.occupations, dtype=float)
        dipole = np.array(self.dipole, dtype=complex)
        efg_me = np.array(self.efg_me, dtype=complex)
        n = energies.shape[0]
        if energies.ndim != 1 or n < 2:
            raise InvalidArgumentError("a level model needs at least two energies")
        if occupations.shape != (n,):
            raise InvalidArgumentError(f"occupations must have length {n}")
        if np.any(occupations < 0.0) or np.any(occupations > 1.0):
            raise InvalidArgumentError("occupations must lie in [0, 1]")
        if dipole.shape != (3, n, n):
            raise InvalidArgumentError(f"dipole must have shape (3, {n}, {n}), got {dipole.shape}")
        if efg_me.shape != (3, 3, n, n):
            raise InvalidArgumentError(f"efg_me must have shape (3, 3, {n}, {n}), got {efg_me.shape}")
        for p in range(3):
            if not _hermitian(dipole[p]):
                raise InvalidArgumentError(f"dipole matrix r_{AXES[p]} is not Hermitian")
        for i in range(3):
            for j in range(3):
                if not _hermitian(efg_me[i, j]):
                    raise InvalidArgumentError(f"EFG matrix V_{AXES[i]}{AXES[j]} is not Hermitian")
                if np.max(np.abs(efg_me[i, j] - efg_me[j, i])) > HERMITIAN_TOLERANCE:
                    raise InvalidArgumentError("EFG matrix elements must be symmetric in (i, j)")
        if not np.isfinite(self.linewidth_eta) or self.linewidth_eta < 0.0:
            raise InvalidArgumentError("linewidth_eta must be non-negative")
        for name, array in (("energies", energies), ("occupations", occupations),
                            ("dipole", dipole), ("efg_me", efg_me)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[0]

    def scaled_dipole(self, factor: float) -> "ElectronicLevelModel":
        """Copy with every position matrix element multiplied by factor."""
        return ElectronicLevelModel(self.energies, self.occupations, self.dipole * factor,
                                    self.efg_me, self.linewidth_eta)

    def min_gap(self) -> float:
        """Smallest positive energy difference between an occupied and a less occupied level."""
        gaps = [abs(self.energies[m] - self.energies[n])
                for m in range(self.n_levels) for n in range(self.n_levels)
                if self.occupations[m] != self.occupations[n] and self.energies[m] != self.energies[n]]
        return min(gaps) if gaps else float("inf")

    def to_dict(self) -> Dict:
        """Serialize with complex entries as [real, imag] pairs."""
        def pairs(matrix):
            return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]

        return {
            "energies": [float(e) for e in self.energies],
            "occupations": [float(f) for f in self.occupations],
            "linewidth_eta": float(self.linewidth_eta),
            "dipole": {AXES[p]: pairs(self.dipole[p]) for p in range(3)},
            "efg": {name: pairs(self.efg_me[i, j]) for name, (i, j) in COMPONENT_INDEX.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ElectronicLevelModel":
        """Create from a mapping; missing dipole axes or EFG components are zero."""
        energies = np.asarray(data["energies"], dtype=float)
        n = energies.shape[0]

        def matrix(pairs):
            array = np.asarray(pairs, dtype=float)
            if array.shape != (n, n, 2):
                raise InvalidArgumentError(f"matrix block must be {n}x{n} [real, imag] pairs")
            return array[..., 0] + 1j * array[..., 1]

        dipole = np.zeros((3, n, n), dtype=complex)
        for axis, pairs in data.get("dipole", {}).items():
            if axis not in AXES:
                raise InvalidArgumentError(f"unknown dipole axis '{axis}'")
            dipole[AXES.index(axis)] = matrix(pairs)
        efg_me = np.zeros((3, 3, n, n), dtype=complex)
        for name, pairs in data.get("efg", {}).items():
            if name not in COMPONENT_INDEX:
                raise InvalidArgumentError(f"unknown EFG component '{name}'")
            i, j = COMPONENT_INDEX[name]
            efg_me[i, j] = efg_me[j, i] = matrix(pairs)
        return cls(energies, data["occupations"], dipole, efg_me,
                   data.get("linewidth_eta", DEFAULT_LINEWIDTH_EV))


@dataclass(frozen=True, eq=False)
class NerTensorC:
    """First-order response dQ_ij/dE_p in 2pi MHz/(V/A), indexed (i, j, p)."""

    c: np.ndarray
    imag_residual: float = 0.0

    def __post_init__(self):
        array = np.array(self.c, dtype=float)
        if array.shape != (3, 3, 3):
            raise InvalidArgumentError(f"C tensor must have shape (3, 3, 3), got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InvalidArgumentError("C tensor must be finite")
        array = 0.5 * (array + array.transpose(1, 0, 2))
        array.setflags(write=False)
        object.__setattr__(self, "c", array)

    def contract(self, polarization: Sequence[float]) -> np.ndarray:
        """C_ij = sum_p C_ij^p e_p."""
        return np.einsum("ijp,p->ij", self.c, _unit_vector(polarization))

    def component(self, ij: str, p: str) -> float:
        i, j = COMPONENT_INDEX[ij]
        return float(self.c[i, j, AXES.index(p)])

    def to_dict(self) -> Dict:
        return {
            "unit": "MHz_2pi_per_V_per_angstrom",
            "components": {f"{ij}^{AXES[p]}": self.component(ij, AXES[p])
                           for ij in COMPONENTS for p in range(3)},
            "imag_residual": self.imag_residual,
        }


@dataclass(frozen=True, eq=False)
class OnqTensorD:
    """Second-order response d^2 Q_ij/dE_p dE_q in 2pi MHz/(V/A)^2, indexed (i, j, p, q)."""

    d: np.ndarray
    imag_residual: float = 0.0

    def __post_init__(self):
        array = np.array(self.d, dtype=float)
        if array.shape != (3, 3, 3, 3):
            raise InvalidArgumentError(f"D tensor must have shape (3, 3, 3, 3), got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InvalidArgumentError("D tensor must be finite")
        array = 0.5 * (array + array.transpose(1, 0, 2, 3))
        array = 0.5 * (array + array.transpose(0, 1, 3, 2))
        array.setflags(write=False)
        object.__setattr__(self, "d", array)

    @classmethod
    def single_component(cls, value: float, ij: str = "xx", pq: str = "xx") -> "OnqTensorD":
        """Tensor with one (ij, pq) component (and its symmetric partners) set."""
        array = np.zeros((3, 3, 3, 3))
        i, j = COMPONENT_INDEX[ij]
        p, q = AXES.index(pq[0]), AXES.index(pq[1])
        for a, b in ((i, j), (j, i)):
            array[a, b, p, q] = array[a, b, q, p] = value
        return cls(array)

    def contract(self, pump: Sequence[float], probe: Sequence[float]) -> np.ndarray:
        """D_ij = sum_pq D_ij^pq e1_p e2_q."""
        return np.einsum("ijpq,p,q->ij", self.d, _unit_vector(pump), _unit_vector(probe))

    def component(self, ij: str, pq: str) -> float:
        i, j = COMPONENT_INDEX[ij]
        return float(self.d[i, j, AXES.index(pq[0]), AXES.index(pq[1])])

    def to_dict(self) -> Dict:
        pairs = ("xx", "yy", "zz", "xy", "xz", "yz")
        return {
            "unit": "MHz_2pi_per_V2_per_angstrom2",
            "components": {f"{ij}^{pq}": self.component(ij, pq) for ij in COMPONENTS for pq in pairs},
            "imag_residual": self.imag_residual,
        }


@dataclass(frozen=True, eq=False)
class EfgFieldSeries:
    """EFG at one nuclear site sampled at a set of applied fields.

    fields is (n, 3) in V/A; efgs is (n, 3, 3) in V/A^2.
    """

    species: NuclearSpecies
    fields: np.ndarray
    efgs: np.ndarray

    def __post_init__(self):
        fields = np.array(self.fields, dtype=float)
        efgs = np.array(self.efgs, dtype=float)
        if fields.ndim != 2 or fields.shape[1] != 3:
            raise InvalidArgumentError(f"fields must have shape (n, 3), got {fields.shape}")
        if efgs.shape != (fields.shape[0], 3, 3):
            raise InvalidArgumentError("efgs must be one 3x3 tensor per field row")
        fields.setflags(write=False)
        efgs.setflags(write=False)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "efgs", efgs)

    @classmethod
    def from_rows(cls, species: NuclearSpecies,
                  rows: Sequence[Tuple[Sequence[float], EfgTensor]]) -> "EfgFieldSeries":
        fields = [row[0] for row in rows]
        efgs = [row[1].v for row in rows]
        return cls(species, np.asarray(fields, dtype=float).reshape(-1, 3),
                   np.asarray(efgs, dtype=float).reshape(-1, 3, 3))

    def __len__(self) -> int:
        return self.fields.shape[0]

    def component_matrix(self, rows: np.ndarray) -> np.ndarray:
        """(len(rows), 6) matrix of the independent EFG components in COMPONENTS order."""
        return np.stack([self.efgs[rows, i, j] for i, j in COMPONENT_INDEX.values()], axis=1)

    def axis_rows(self, axis: int) -> np.ndarray:
        """Rows whose field lies on the given axis (the zero-field row included), sorted by field."""
        others = [k for k in range(3) if k != axis]
        mask = np.all(self.fields[:, others] == 0.0, axis=1)
        rows = np.flatnonzero(mask)
        return rows[np.argsort(self.fields[rows, axis], kind="stable")]

    def plane_rows(self, p: int, q: int) -> np.ndarray:
        """Rows whose field lies in the (p, q) plane."""
        other = [k for k in range(3) if k not in (p, q)]
        return np.flatnonzero(np.all(self.fields[:, other] == 0.0, axis=1))

    def has_off_axis_rows(self, p: int, q: int) -> bool:
        rows = self.plane_rows(p, q)
        return bool(np.any((self.fields[rows, p] != 0.0) & (self.fields[rows, q] != 0.0)))

    def distinct_values(self, axis: int) -> int:
        return len(np.unique(self.fields[self.axis_rows(axis), axis]))


@dataclass(frozen=True, eq=False)
class TensorFitReport:
    """Result of fitting an EfgFieldSeries.

    linear[i, j, p] and second[i, j, p, q] are the raw derivatives dV_ij/dE_p (V/A^2 per V/A)
    and d^2 V_ij/dE_p dE_q; residuals maps "ij^p" (or "ij^pq" for plane fits) to the residual norm.
    """

    c: NerTensorC
    d: OnqTensorD
    linear: np.ndarray
    second: np.ndarray
    residuals: Dict[str, float]
    axes: Tuple[int, ...]
    pairs: Tuple[Tuple[int, int], ...]
    fit_order: int

    def to_dict(self) -> Dict:
        measured_d = [f"{ij}^{AXES[p]}{AXES[p]}" for ij in COMPONENTS for p in self.axes]
        measured_d += [f"{ij}^{AXES[p]}{AXES[q]}" for ij in COMPONENTS for p, q in self.pairs]
        return {
            "fit_order": self.fit_order,
            "axes": [AXES[p] for p in self.axes],
            "pairs": [AXES[p] + AXES[q] for p, q in self.pairs],
            "C": {f"{ij}^{AXES[p]}": self.c.component(ij, AXES[p]) for ij in COMPONENTS for p in self.axes},
            "D": {key: self.d.component(key[:2], key[3:]) for key in measured_d},
            "residuals": dict(self.residuals),
        }


@dataclass(frozen=True)
class MirrorComponentFlag:
    """Mirror-symmetry verdict for one EFG component."""

    component: str
    linear_forbidden: bool
    linear_coefficient: float
    tolerance: float
    respects_symmetry: bool


@dataclass(frozen=True)
class MirrorSymmetryReport:
    mirror_axis: str
    flags: List[MirrorComponentFlag] = field(default_factory=list)

    @property
    def forbidden_components(self) -> List[str]:
        return [f.component for f in self.flags if f.linear_forbidden]

    @property
    def consistent(self) -> bool:
        return all(f.respects_symmetry for f in self.flags)

    def to_dict(self) -> Dict:
        return {
            "mirror_axis": self.mirror_axis,
            "consistent": self.consistent,
            "components": {
                f.component: {
                    "linear_forbidden": f.linear_forbidden,
                    "linear_coefficient": f.linear_coefficient,
                    "tolerance": f.tolerance,
                    "respects_symmetry": f.respects_symmetry,
                }
                for f in self.flags
            },
        }
