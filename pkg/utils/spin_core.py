"""
Nuclear spin utilities for ONQ Lab.
Handles spin operators, the static Zeeman + quadrupole Hamiltonian, level structure and the
ONQ coupling matrix element.
"""

import logging
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
import qutip as qt

from models.species import EfgTensor, NuclearSpecies, QuadrupoleTensor, SpinLevelStructure, SpinOperators, check_spin
from models.tensors import NerTensorC, OnqTensorD
from utils.constants import ELEMENTARY_CHARGE, HBAR, MHZ_2PI, PLANCK, V_PER_ANGSTROM2
from utils.errors import InvalidArgumentError, SpinTooSmallError

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-8


@lru_cache(maxsize=None)
def spin_operators(spin_I: float) -> SpinOperators:
    """
    Build the angular momentum matrices for spin I.

    Args:
        spin_I: Positive half-integer up to 9/2

    Returns:
        SpinOperators with basis ordered m = I, ..., -I
    """
    spin_I = check_spin(spin_I)
    matrices = []
    for axis in ("x", "y", "z"):
        m = qt.jmat(spin_I, axis).full()
        m.setflags(write=False)
        matrices.append(m)
    return SpinOperators(spin_I, *matrices)


def _quadrupole_scale(species: NuclearSpecies) -> float:
    """e q / (2I(2I-1)) / hbar, in rad/s per (V/m^2)."""
    if not species.has_quadrupole:
        raise SpinTooSmallError(f"{species.label} has I = 1/2; the quadrupole term vanishes")
    two_i = 2.0 * species.spin_I
    return ELEMENTARY_CHARGE * species.quadrupole_moment / (two_i * (two_i - 1.0)) / HBAR


def quadrupole_prefactor(species: NuclearSpecies) -> float:
    """e q / (2I(2I-1)) expressed in 2pi MHz per (V/A^2)."""
    return _quadrupole_scale(species) * V_PER_ANGSTROM2 / MHZ_2PI


def quadrupole_tensor(species: NuclearSpecies, efg: EfgTensor) -> QuadrupoleTensor:
    """
    Compute Q_ij = e q V_ij / (2I(2I-1)) in rad/s.

    Args:
        species: Nucleus with I > 1/2
        efg: Field gradient at the site

    Returns:
        QuadrupoleTensor
    """
    return QuadrupoleTensor(_quadrupole_scale(species) * efg.v * V_PER_ANGSTROM2)


def efg_principal_frame(efg: EfgTensor) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Diagonalize an EFG in the NQR convention |V_zz| >= |V_yy| >= |V_xx|.

    Returns:
        (principal values [V_xx, V_yy, V_zz], rotation with principal axes as columns, asymmetry eta)
    """
    values, vectors = np.linalg.eigh(efg.v)
    order = np.argsort(np.abs(values), kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    vzz = values[2]
    eta = 0.0 if vzz == 0.0 else float((values[0] - values[1]) / vzz)
    return values, vectors, abs(eta)


def quadrupole_coupling_constant(species: NuclearSpecies, efg: EfgTensor) -> float:
    """
    C_q = e q V_zz / h in Hz, V_zz being the largest-magnitude principal value.

    The sign follows q V_zz.
    """
    values, _, _ = efg_principal_frame(efg)
    vzz = values[2] * V_PER_ANGSTROM2
    return ELEMENTARY_CHARGE * species.quadrupole_moment * vzz / PLANCK


def static_hamiltonian(species: NuclearSpecies, b_field: Sequence[float],
                       quad: Optional[QuadrupoleTensor], ops: SpinOperators) -> np.ndarray:
    """
    H = g_m sum_i B_i I_i + sum_ij Q_ij (I_i I_j + I_j I_i)/2, in rad/s.

    Args:
        species: Supplies g_m and the dimension check
        b_field: Magnetic field vector in tesla
        quad: Quadrupole tensor, or None for a pure Zeeman Hamiltonian
        ops: Spin matrices for the species' I

    Returns:
        Hermitian (2I+1)x(2I+1) matrix
    """
    b = np.asarray(b_field, dtype=float)
    if b.shape != (3,):
        raise InvalidArgumentError(f"b_field must be a 3-vector, got shape {b.shape}")
    if ops.dim != species.dim:
        raise InvalidArgumentError(
            f"spin operators have dimension {ops.dim}, {species.label} needs {species.dim}"
        )
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    for i, op in enumerate(ops.cartesian):
        h += species.gyromagnetic_ratio * b[i] * op
    if quad is not None:
        for i in range(3):
            for j in range(3):
                if quad.q[i, j] != 0.0:
                    h += quad.q[i, j] * ops.symmetrized_product(i, j)
    return h


def _resolve_degenerate(vectors: np.ndarray) -> np.ndarray:
    """Re-span a degenerate subspace by the I_z basis states it overlaps most."""
    dim, k = vectors.shape
    projector = vectors @ vectors.conj().T
    weights = np.sum(np.abs(vectors) ** 2, axis=1)
    order = sorted(range(dim), key=lambda m: (-round(weights[m], 12), m))
    basis = []
    for m in order:
        candidate = projector[:, m].copy()
        for b in basis:
            candidate -= (b.conj() @ candidate) * b
        norm = np.linalg.norm(candidate)
        if norm > 1e-8:
            basis.append(candidate / norm)
        if len(basis) == k:
            break
    return np.column_stack(basis)


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude component is real positive."""
    magnitudes = np.round(np.abs(vector), 12)
    k = int(np.argmax(magnitudes))
    return vector * (abs(vector[k]) / vector[k])


def spin_levels(h: np.ndarray) -> SpinLevelStructure:
    """
    Diagonalize a spin Hamiltonian.

    Args:
        h: Hermitian matrix in rad/s

    Returns:
        SpinLevelStructure with ascending energies; degenerate subspaces are spanned by the
        states of maximal I_z-basis overlap and every eigenvector carries a fixed phase
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidArgumentError(f"Hamiltonian must be square, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOLERANCE * scale:
        raise InvalidArgumentError("Hamiltonian is not Hermitian")
    energies, vectors = np.linalg.eigh(0.5 * (h + h.conj().T))
    levels = SpinLevelStructure(energies, vectors)
    resolved = vectors.copy()
    for group in levels.level_groups():
        columns = list(group)
        if len(columns) > 1:
            resolved[:, columns] = _resolve_degenerate(vectors[:, columns])
    for k in range(resolved.shape[1]):
        resolved[:, k] = _fix_phase(resolved[:, k])
    energies.setflags(write=False)
    resolved.setflags(write=False)
    return SpinLevelStructure(energies, resolved)


def _check_state(state: np.ndarray, ops: SpinOperators, name: str) -> np.ndarray:
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.shape[0] != ops.dim:
        raise InvalidArgumentError(f"{name} has dimension {state.shape[0]}, expected {ops.dim}")
    if abs(np.linalg.norm(state) - 1.0) > NORM_TOLERANCE:
        raise InvalidArgumentError(f"{name} is not normalized (norm {np.linalg.norm(state):.6f})")
    return state


def transition_matrix_elements(g_state: np.ndarray, e_state: np.ndarray,
                               ops: SpinOperators) -> np.ndarray:
    """<g|(I_i I_j + I_j I_i)/2|e> as a 3x3 complex matrix."""
    g = _check_state(g_state, ops, "g_state")
    e = _check_state(e_state, ops, "e_state")
    elements = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            elements[i, j] = g.conj() @ ops.symmetrized_product(i, j) @ e
    return elements


def onq_coupling_strength(d: OnqTensorD, g_state: np.ndarray, e_state: np.ndarray,
                          ops: SpinOperators, pump_polarization: Sequence[float] = (1.0, 0.0, 0.0),
                          probe_polarization: Sequence[float] = (1.0, 0.0, 0.0)) -> complex:
    """
    g_o = sum_ij D_ij <g|(I_i I_j + I_j I_i)/2|e>.

    D_ij is the response tensor contracted with the two field polarizations.

    Returns:
        Complex g_o in 2pi MHz/(V/A)^2
    """
    contracted = d.contract(pump_polarization, probe_polarization)
    elements = transition_matrix_elements(g_state, e_state, ops)
    return complex(np.sum(contracted * elements))


def ner_rabi_frequency(c: NerTensorC, g_state: np.ndarray, e_state: np.ndarray,
                       ops: SpinOperators, field: float,
                       polarization: Sequence[float] = (1.0, 0.0, 0.0)) -> float:
    """
    First-order (NER) Rabi frequency |C_off| E, in Hz.

    Args:
        c: NER tensor in 2pi MHz/(V/A)
        field: Drive amplitude in V/A
    """
    if field < 0:
        raise InvalidArgumentError("field amplitude must be non-negative")
    elements = transition_matrix_elements(g_state, e_state, ops)
    c_off = np.sum(c.contract(polarization) * elements)
    return abs(c_off) * 1e6 * field


def single_spin_rabi_frequency(g_o: complex, e1: float, e2: float) -> float:
    """
    f = |g_o| E(w1) E(-w2) / 2pi in Hz.

    Args:
        g_o: Coupling in 2pi MHz/(V/A)^2
        e1: Pump amplitude in V/A
        e2: Second field amplitude in V/A
    """
    if e1 < 0 or e2 < 0:
        raise InvalidArgumentError("field amplitudes must be non-negative")
    return abs(g_o) * 1e6 * e1 * e2
