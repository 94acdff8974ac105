"""
Response tensor estimators for ONQ Lab.
Handles sum-over-states perturbation theory, the closed-form order-of-magnitude estimates and
polynomial fits of EFG-vs-field data.

Sum-over-states inputs use eV, A and V/A^2. In those units e r E / dE is dimensionless, so every
estimator shares the prefactor e q / (2I(2I-1)) in 2pi MHz per (V/A^2).
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from models.species import AXES, COMPONENT_INDEX, COMPONENTS, NuclearSpecies
from models.tensors import (
    ElectronicLevelModel,
    EfgFieldSeries,
    MirrorComponentFlag,
    MirrorSymmetryReport,
    NerTensorC,
    OnqTensorD,
    TensorFitReport,
)
from utils.constants import (
    ANGSTROM,
    BOHR_RADIUS,
    ELEMENTARY_CHARGE,
    EPSILON_0,
    SPIN_DEGENERACY,
    V_PER_ANGSTROM2,
)
from utils.errors import FitFailureError, InvalidArgumentError, SingularityError
from utils.spin_core import quadrupole_prefactor

logger = logging.getLogger(__name__)

RESONANCE_FACTOR = 10.0
BOHR_RADIUS_ANGSTROM = BOHR_RADIUS / ANGSTROM


def _inverse_denominators(delta_e: np.ndarray, shift: float, eta: float,
                          include: np.ndarray, skipped: List[float]) -> np.ndarray:
    """
    1/(delta_e - shift + i eta) on the included entries, zero elsewhere.

    Entries with |denominator| < 10 eta are dropped and their magnitudes appended to skipped.
    """
    den = delta_e - shift + 1j * eta
    magnitude = np.abs(den)
    if eta == 0.0 and np.any(include & (magnitude == 0.0)):
        raise SingularityError(f"resonant denominator at shift {shift} eV with zero linewidth")
    near = include & (magnitude < RESONANCE_FACTOR * eta)
    skipped.extend(magnitude[near].tolist())
    keep = include & ~near
    out = np.zeros_like(den)
    out[keep] = 1.0 / den[keep]
    return out


def _report_skipped(skipped: List[float], eta: float, what: str):
    if skipped:
        logger.warning(
            "%s: skipped %d near-resonant terms (smallest |denominator| %.3e eV < %g x eta = %.3e eV)",
            what, len(skipped), min(skipped), RESONANCE_FACTOR, RESONANCE_FACTOR * eta,
        )


def _check_omega(model: ElectronicLevelModel, *omegas: float):
    for omega in omegas:
        if omega < 0:
            raise InvalidArgumentError(f"photon energy must be non-negative, got {omega}")
    gap = model.min_gap()
    if any(omega >= gap for omega in omegas):
        logger.warning("photon energy %s eV is not below the smallest gap %.4f eV", omegas, gap)


def c_tensor_perturbation(model: ElectronicLevelModel, species: NuclearSpecies,
                          omega: float = 0.0) -> NerTensorC:
    """
    First-order (NER) tensor from the sum over level pairs.

    C_ij^p = [e^2 q/(2I(2I-1))] sum_{m != n} f_nm [V_ij]_nm [r_p]_mn / (E_mn - w + i eta)

    Args:
        model: Level model (eV, A, V/A^2)
        species: Nucleus with I > 1/2
        omega: Drive photon energy in eV

    Returns:
        NerTensorC with the real part; the imaginary residue is kept as a diagnostic
    """
    prefactor = quadrupole_prefactor(species)
    _check_omega(model, omega)
    e = model.energies
    f = model.occupations
    delta_e = e[:, None] - e[None, :]            # E_mn
    f_nm = f[None, :] - f[:, None]               # f_n - f_m at [m, n]
    include = ~np.eye(model.n_levels, dtype=bool) & (f_nm != 0.0)
    skipped: List[float] = []
    weights = f_nm * _inverse_denominators(delta_e, omega, model.linewidth_eta, include, skipped)
    _report_skipped(skipped, model.linewidth_eta, "C tensor")
    total = prefactor * np.einsum("mn,ijnm,pmn->ijp", weights, model.efg_me, model.dipole)
    return NerTensorC(total.real, imag_residual=float(np.max(np.abs(total.imag), initial=0.0)))


def _d_term(model: ElectronicLevelModel, w_a: float, w_b: float, skipped: List[float]) -> np.ndarray:
    """
    One ordering of the three-level sum, indexed (i, j, p, q):

    sum_{mnl} [V]_mn / (E_mn - (w_a - w_b) + i eta) *
        ( f_lm [r_p]_nl [r_q]_lm / (E_ml - w_b + i eta) - f_nl [r_q]_nl [r_p]_lm / (E_ln - w_b + i eta) )
    """
    e = model.energies
    f = model.occupations
    eta = model.linewidth_eta
    off_diagonal = ~np.eye(model.n_levels, dtype=bool)
    delta_e = e[:, None] - e[None, :]
    outer = _inverse_denominators(delta_e, w_a - w_b, eta, off_diagonal, skipped)
    f_lm = f[None, :] - f[:, None]               # f_l - f_m at [m, l]
    x1 = f_lm * _inverse_denominators(delta_e, w_b, eta, off_diagonal & (f_lm != 0.0), skipped)
    f_nl = f[:, None] - f[None, :]               # f_n - f_l at [n, l]
    x2 = f_nl * _inverse_denominators(-delta_e, w_b, eta, off_diagonal & (f_nl != 0.0), skipped)
    r = model.dipole
    first = np.einsum("mn,ijmn,pnl,qlm,ml->ijpq", outer, model.efg_me, r, r, x1, optimize=True)
    second = np.einsum("mn,ijmn,qnl,plm,nl->ijpq", outer, model.efg_me, r, r, x2, optimize=True)
    return first - second


def d_tensor_perturbation(model: ElectronicLevelModel, species: NuclearSpecies,
                          omega1: float, omega2: float) -> OnqTensorD:
    """
    Second-order (ONQ) tensor from the three-level sum, symmetrized over (p, w1) <-> (q, w2).

    Args:
        model: Level model (eV, A, V/A^2)
        species: Nucleus with I > 1/2
        omega1: Pump photon energy in eV
        omega2: Second photon energy in eV

    Returns:
        OnqTensorD, symmetric in (i, j) and (p, q)
    """
    prefactor = quadrupole_prefactor(species)
    _check_omega(model, omega1, omega2)
    skipped: List[float] = []
    raw = _d_term(model, omega1, omega2, skipped)
    raw = raw + _d_term(model, omega2, omega1, skipped).transpose(0, 1, 3, 2)
    _report_skipped(skipped, model.linewidth_eta, "D tensor")
    total = prefactor * 0.5 * (raw + raw.transpose(0, 1, 3, 2))
    return OnqTensorD(total.real, imag_residual=float(np.max(np.abs(total.imag), initial=0.0)))


def c_closed_form(species: NuclearSpecies, e_gap: float, a0: float = BOHR_RADIUS_ANGSTROM) -> float:
    """
    Order-of-magnitude NER tensor, g_s e^3 q / (2I(2I-1)) / (4 pi eps0 a0^2) / E_g.

    Args:
        species: Nucleus with I > 1/2
        e_gap: Band gap in eV
        a0: Length scale of the matrix elements in A (Bohr radius by default)

    Returns:
        C in 2pi MHz/(V/A)
    """
    if e_gap <= 0:
        raise InvalidArgumentError(f"e_gap must be positive, got {e_gap}")
    if a0 <= 0:
        raise InvalidArgumentError(f"a0 must be positive, got {a0}")
    prefactor = quadrupole_prefactor(species)
    # e a0 / a0^3 expressed as (V/A^2) * A per eV
    efg_scale = ELEMENTARY_CHARGE / (4 * np.pi * EPSILON_0 * (a0 * ANGSTROM) ** 3) / V_PER_ANGSTROM2
    return SPIN_DEGENERACY * prefactor * efg_scale * a0 / e_gap


def d_closed_form(species: NuclearSpecies, e_gap: float, omega_pump: float,
                  a0: float = BOHR_RADIUS_ANGSTROM) -> float:
    """
    Order-of-magnitude ONQ tensor, g_s e^4 q / (2I(2I-1)) / (4 pi eps0 a0) / (E_g (E_g - w)).

    Returns:
        D in 2pi MHz/(V/A)^2
    """
    if omega_pump < 0 or omega_pump >= e_gap:
        raise InvalidArgumentError(
            f"omega_pump must satisfy 0 <= omega_pump < e_gap, got {omega_pump} and {e_gap}"
        )
    return c_closed_form(species, e_gap, a0) * a0 / (e_gap - omega_pump)


def level_model_from_pair(e_gap: float, r: float = BOHR_RADIUS_ANGSTROM,
                          v: Optional[float] = None, component: str = "zz", axis: str = "x",
                          eta: float = 1e-3) -> ElectronicLevelModel:
    """
    Two-level model with one occupied level at 0 and one empty level at e_gap.

    Args:
        e_gap: Level splitting in eV
        r: Position matrix element in A along axis
        v: EFG matrix element in V/A^2; defaults to e/(4 pi eps0 r^3)
        component: EFG component carrying v
        axis: Cartesian axis of the dipole
        eta: Linewidth in eV
    """
    if v is None:
        v = ELEMENTARY_CHARGE / (4 * np.pi * EPSILON_0 * (r * ANGSTROM) ** 3) / V_PER_ANGSTROM2
    dipole = np.zeros((3, 2, 2), dtype=complex)
    dipole[AXES.index(axis)] = [[0.0, r], [r, 0.0]]
    efg_me = np.zeros((3, 3, 2, 2), dtype=complex)
    i, j = COMPONENT_INDEX[component]
    efg_me[i, j] = efg_me[j, i] = [[0.0, v], [v, 0.0]]
    return ElectronicLevelModel([0.0, e_gap], [1.0, 0.0], dipole, efg_me, eta)


def _scaled_lstsq(x: np.ndarray, y: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Polynomial least squares in x / max|x|.

    Returns:
        (coefficients in unscaled x, lowest order first, shape (order+1, k); residual norms, shape (k,))
    """
    scale = float(np.max(np.abs(x)))
    if scale == 0.0:
        raise FitFailureError("all field values are zero")
    design = np.vander(x / scale, order + 1, increasing=True)
    coefficients, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < order + 1:
        raise FitFailureError(f"design matrix has rank {rank}, need {order + 1}")
    residual = np.linalg.norm(design @ coefficients - y, axis=0)
    return coefficients / scale ** np.arange(order + 1)[:, None], residual


def _plane_lstsq(fields: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two-variable quadratic fit; returns (bilinear coefficient per column, residual norms)."""
    scale_p = float(np.max(np.abs(fields[:, 0])))
    scale_q = float(np.max(np.abs(fields[:, 1])))
    u, w = fields[:, 0] / scale_p, fields[:, 1] / scale_q
    design = np.column_stack([np.ones_like(u), u, w, u * u, w * w, u * w])
    coefficients, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitFailureError(f"two-axis design matrix has rank {rank}, need {design.shape[1]}")
    residual = np.linalg.norm(design @ coefficients - y, axis=0)
    return coefficients[5] / (scale_p * scale_q), residual


def fit_response_tensors(series: EfgFieldSeries, fit_order: int = 2) -> TensorFitReport:
    """
    Fit every EFG component against every swept field axis.

    Single-axis sweeps give C_ij^p and D_ij^pp; rows spanning a (p, q) plane off the axes add
    D_ij^pq through the bilinear term of a two-variable quadratic.

    Args:
        series: EFG-vs-field data
        fit_order: 2 or 3

    Returns:
        TensorFitReport with C, D, raw derivatives and residual norms
    """
    if fit_order not in (2, 3):
        raise InvalidArgumentError(f"fit_order must be 2 or 3, got {fit_order}")
    prefactor = quadrupole_prefactor(series.species)
    linear = np.zeros((3, 3, 3))
    second = np.zeros((3, 3, 3, 3))
    residuals: Dict[str, float] = {}
    axes = []
    for p in range(3):
        rows = series.axis_rows(p)
        if series.distinct_values(p) < 2 or not np.any(series.fields[rows, p] != 0.0):
            continue
        if series.distinct_values(p) < fit_order + 1:
            raise InvalidArgumentError(
                f"axis {AXES[p]} has {series.distinct_values(p)} distinct fields, "
                f"need {fit_order + 1} for an order-{fit_order} fit"
            )
        coefficients, residual = _scaled_lstsq(series.fields[rows, p], series.component_matrix(rows), fit_order)
        for k, (i, j) in enumerate(COMPONENT_INDEX.values()):
            linear[i, j, p] = linear[j, i, p] = coefficients[1, k]
            second[i, j, p, p] = second[j, i, p, p] = 2.0 * coefficients[2, k]
            residuals[f"{COMPONENTS[k]}^{AXES[p]}"] = float(residual[k])
        axes.append(p)
    if not axes:
        raise InvalidArgumentError("series has no single-axis field sweep")

    pairs = []
    for p in range(3):
        for q in range(p + 1, 3):
            if not series.has_off_axis_rows(p, q):
                continue
            rows = series.plane_rows(p, q)
            bilinear, residual = _plane_lstsq(series.fields[rows][:, [p, q]], series.component_matrix(rows))
            for k, (i, j) in enumerate(COMPONENT_INDEX.values()):
                for a, b in ((i, j), (j, i)):
                    second[a, b, p, q] = second[a, b, q, p] = bilinear[k]
                residuals[f"{COMPONENTS[k]}^{AXES[p]}{AXES[q]}"] = float(residual[k])
            pairs.append((p, q))

    logger.info("fitted %d rows of %s along axes %s", len(series), series.species.label,
                [AXES[p] for p in axes])
    return TensorFitReport(
        c=NerTensorC(prefactor * linear),
        d=OnqTensorD(prefactor * second),
        linear=linear,
        second=second,
        residuals=residuals,
        axes=tuple(axes),
        pairs=tuple(pairs),
        fit_order=fit_order,
    )


def mirror_symmetry_report(series: EfgFieldSeries, mirror_axis: str) -> MirrorSymmetryReport:
    """
    Check which EFG components must have zero linear response under a mirror plane.

    Under the mirror a -> -a, V_ij picks up (-1)^[(i==a)+(j==a)] and E_a changes sign, so the
    linear coefficient dV_ij/dE_a vanishes when that count is even.

    Args:
        series: Data containing points at +E and -E along mirror_axis
        mirror_axis: "x", "y" or "z"
    """
    if mirror_axis not in AXES:
        raise InvalidArgumentError(f"mirror_axis must be one of {AXES}, got {mirror_axis!r}")
    a = AXES.index(mirror_axis)
    rows = series.axis_rows(a)
    values = series.fields[rows, a]
    if not np.any(values > 0) or not np.any(values < 0):
        raise InvalidArgumentError(f"series has no points at both +E and -E along {mirror_axis}")
    order = min(2, len(np.unique(values)) - 1)
    y = series.component_matrix(rows)
    coefficients, residual = _scaled_lstsq(values, y, order)
    e_max = float(np.max(np.abs(values)))
    flags = []
    for k, (name, (i, j)) in enumerate(COMPONENT_INDEX.items()):
        forbidden = ((i == a) + (j == a)) % 2 == 0
        coefficient = float(coefficients[1, k])
        scale = max(1.0, float(np.max(np.abs(y[:, k]))))
        tolerance = (1e-10 * scale + float(residual[k])) / e_max
        respects = abs(coefficient) <= tolerance if forbidden else True
        if not respects:
            logger.warning("component %s breaks mirror %s: dV/dE = %.3e > %.3e",
                           name, mirror_axis, coefficient, tolerance)
        flags.append(MirrorComponentFlag(name, forbidden, coefficient, tolerance, respects))
    return MirrorSymmetryReport(mirror_axis, flags)

