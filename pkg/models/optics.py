"""
Optical feasibility models for ONQ Lab.
Represents the host material, the pump laser and the sample geometry used by the heating,
ionization and readout budgets.
"""

from dataclasses import dataclass
from typing import Dict, Optional

from utils.constants import ELECTRON_MASS
from utils.errors import InvalidArgumentError


@dataclass(frozen=True)
class MaterialOptics:
    """Host crystal optical and thermal constants (SI, band gap in eV)."""

    bandgap_Eg: float
    two_photon_beta: float
    thermal_conductivity_kth: float
    refractive_index_n: float
    relative_permittivity_eps_r: float
    effective_mass: float = ELECTRON_MASS

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if not value > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {value}")

    def to_dict(self) -> Dict[str, float]:
        return {
            "bandgap_Eg": self.bandgap_Eg,
            "two_photon_beta": self.two_photon_beta,
            "thermal_conductivity_kth": self.thermal_conductivity_kth,
            "refractive_index_n": self.refractive_index_n,
            "relative_permittivity_eps_r": self.relative_permittivity_eps_r,
            "effective_mass": self.effective_mass,
        }


@dataclass(frozen=True)
class LaserField:
    """Classical pump: amplitude in V/m, angular frequency and linewidth in rad/s."""

    amplitude_E: float
    angular_frequency: float
    linewidth_kappa: float = 0.0

    def __post_init__(self):
        if self.amplitude_E < 0:
            raise InvalidArgumentError("laser amplitude must be non-negative")
        if self.linewidth_kappa < 0:
            raise InvalidArgumentError("laser linewidth must be non-negative")
        if not self.angular_frequency > 0:
            raise InvalidArgumentError("laser angular frequency must be positive")

    def scaled(self, factor: float) -> "LaserField":
        return LaserField(self.amplitude_E * factor, self.angular_frequency, self.linewidth_kappa)


@dataclass(frozen=True)
class SampleGeometry:
    """Crystal depth along the beam (m) and illuminated area (m^2)."""

    depth_d: float
    transverse_area: Optional[float] = None

    def __post_init__(self):
        if not self.depth_d > 0:
            raise InvalidArgumentError("sample depth must be positive")
        if self.transverse_area is not None and not self.transverse_area > 0:
            raise InvalidArgumentError("sample area must be positive")
