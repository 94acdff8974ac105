"""
Feasibility calculators for ONQ Lab.
Closed-form budgets for laser heating, ionization, single-spin readout, dispersive readout and
linewidth-limited Rabi efficiency.
"""

import math
from dataclasses import dataclass
from typing import Dict

from models.optics import LaserField, MaterialOptics, SampleGeometry
from utils.constants import ELEMENTARY_CHARGE, EPSILON_0, MHZ_2PI, SPEED_OF_LIGHT, V_PER_ANGSTROM
from utils.dynamics import collective_optical_coupling, zero_point_electric_field
from utils.errors import InvalidArgumentError, SingularityError

KELDYSH_THRESHOLD = 1.5
SQRT_EXPONENT = "sqrt"
PRINTED_EXPONENT = "printed"


@dataclass(frozen=True)
class AbsorbedPower:
    """Absorbed power per area, exact exponential form and its small-depth linearization (W/m^2)."""

    exact: float
    linearized: float


@dataclass(frozen=True)
class LinewidthBudget:
    """Outcome of the linewidth budget check."""

    passed: bool
    efficiency: float
    detune_ok: bool
    kappa1_ok: bool
    kappa2_ok: bool
    threshold: float

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "efficiency": self.efficiency,
            "detune_ok": self.detune_ok,
            "kappa1_ok": self.kappa1_ok,
            "kappa2_ok": self.kappa2_ok,
            "threshold": self.threshold,
        }


def incident_power_density(field: LaserField) -> float:
    """P_in = c0 eps0 E^2 / 2 in W/m^2."""
    return 0.5 * SPEED_OF_LIGHT * EPSILON_0 * field.amplitude_E ** 2


def two_photon_penetration_depth(mat: MaterialOptics, field: LaserField) -> float:
    """
    d_p = 1/(beta P_in) in m.

    Returns:
        math.inf for a zero-amplitude field
    """
    p_in = incident_power_density(field)
    if p_in == 0:
        return math.inf
    return 1.0 / (mat.two_photon_beta * p_in)


def absorbed_power_density(p_in: float, geom: SampleGeometry, d_p: float) -> AbsorbedPower:
    """P_abs = P_in (1 - exp(-d/d_p)), with the linearization P_in d/d_p alongside."""
    if not d_p > 0:
        raise InvalidArgumentError(f"d_p must be positive, got {d_p}")
    ratio = geom.depth_d / d_p
    return AbsorbedPower(exact=p_in * -math.expm1(-ratio), linearized=p_in * ratio)


def temperature_rise(mat: MaterialOptics, field: LaserField, geom: SampleGeometry) -> float:
    """Delta T = P_abs d / k_th in K, with the linearized absorbed power."""
    p_in = incident_power_density(field)
    d_p = two_photon_penetration_depth(mat, field)
    absorbed = absorbed_power_density(p_in, geom, d_p)
    return absorbed.linearized * geom.depth_d / mat.thermal_conductivity_kth


def keldysh_parameter(mat: MaterialOptics, field: LaserField, exponent: str = SQRT_EXPONENT) -> float:
    """
    gamma = (w/e) sqrt(m c0 n eps0 E_g / P_in).

    Args:
        mat: Supplies E_g (eV), n and the carrier mass
        field: Pump amplitude and angular frequency
        exponent: "sqrt" (standard form) or "printed" (the squared bracket, kept for comparison)

    Returns:
        gamma; math.inf for a zero-amplitude field
    """
    p_in = incident_power_density(field)
    if p_in == 0:
        return math.inf
    bracket = (mat.effective_mass * SPEED_OF_LIGHT * mat.refractive_index_n * EPSILON_0
               * mat.bandgap_Eg * ELEMENTARY_CHARGE / p_in)
    if exponent == SQRT_EXPONENT:
        factor = math.sqrt(bracket)
    elif exponent == PRINTED_EXPONENT:
        factor = bracket ** 2
    else:
        raise InvalidArgumentError(f"exponent must be '{SQRT_EXPONENT}' or '{PRINTED_EXPONENT}'")
    return field.angular_frequency / ELEMENTARY_CHARGE * factor


def classify_keldysh(gamma: float, threshold: float = KELDYSH_THRESHOLD) -> bool:
    """True when tunnelling ionization is negligible (gamma >= threshold)."""
    return gamma >= threshold


def single_spin_emission_rate(g_o: complex, pump_field: float, omega_o1: float, eps_r: float,
                              mode_volume: float, quality_factor: float) -> float:
    """
    R = 2 [g_o E_pump E_zpf]^2 / kappa_o1 with kappa_o1 = w_o1 / Q.

    Args:
        g_o: Coupling in 2pi MHz/(V/A)^2
        pump_field: V/A
        omega_o1: Cavity angular frequency, rad/s

    Returns:
        R in Hz (the rate divided by 2 pi)
    """
    if not quality_factor > 0:
        raise InvalidArgumentError("quality_factor must be positive")
    if pump_field < 0:
        raise InvalidArgumentError("pump_field must be non-negative")
    e_zpf = zero_point_electric_field(omega_o1, eps_r, mode_volume)
    coupling = abs(g_o) * MHZ_2PI * pump_field * e_zpf / V_PER_ANGSTROM
    kappa = omega_o1 / quality_factor
    return 2.0 * coupling ** 2 / kappa / (2.0 * math.pi)


def dispersive_shift(g_o: complex, N: float, pump_field: float, e_zpf: float, delta: float,
                     anharmonicity_alpha: float) -> float:
    """zeta = (2 G^2 / delta) / (1 + delta/alpha) in rad/s, G the collective optical coupling."""
    if delta == 0:
        raise SingularityError("delta = 0")
    if not anharmonicity_alpha > 0:
        raise InvalidArgumentError("anharmonicity_alpha must be positive")
    coupling = collective_optical_coupling(g_o, N, pump_field, e_zpf)
    return 2.0 * coupling ** 2 / delta / (1.0 + delta / anharmonicity_alpha)


def rabi_efficiency(f_rabi: float, detune: float, kappa1: float, kappa2: float) -> float:
    """eta0 = f (f + k1 + k2) / (detune^2 + (f + k1 + k2)^2); 0 without drive."""
    if f_rabi < 0 or kappa1 < 0 or kappa2 < 0:
        raise InvalidArgumentError("f_rabi and linewidths must be non-negative")
    if f_rabi == 0:
        return 0.0
    width = f_rabi + kappa1 + kappa2
    return f_rabi * width / (detune ** 2 + width ** 2)


def linewidth_budget_check(f_rabi: float, detune: float, kappa1: float, kappa2: float,
                           threshold: float = 1.0) -> LinewidthBudget:
    """Pass when |detune|, kappa1 and kappa2 are all <= threshold x f_rabi (inclusive)."""
    limit = threshold * f_rabi
    detune_ok = abs(detune) <= limit
    kappa1_ok = kappa1 <= limit
    kappa2_ok = kappa2 <= limit
    return LinewidthBudget(
        passed=detune_ok and kappa1_ok and kappa2_ok,
        efficiency=rabi_efficiency(f_rabi, detune, kappa1, kappa2),
        detune_ok=detune_ok,
        kappa1_ok=kappa1_ok,
        kappa2_ok=kappa2_ok,
        threshold=threshold,
    )
