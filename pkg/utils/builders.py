"""
Scenario builders for ONQ Lab.
Turns a validated ScenarioConfig into species, field gradients, transduction parameters and the
inputs of the feasibility budgets.
"""

from typing import Dict, Optional

import numpy as np

from models.optics import LaserField, MaterialOptics, SampleGeometry
from models.species import EfgTensor, NuclearSpecies
from models.system import BosonicMode, CollectiveSpinMode, TransductionParams
from utils import database
from utils.config import ScenarioConfig
from utils.constants import ELECTRON_MASS, MHZ_2PI
from utils.dynamics import (
    collective_field_density,
    transduction_params_from_modes,
    zero_point_electric_field,
)
from utils.errors import ConfigError, InvalidArgumentError

D_TAG = "MHz_2pi_per_V2_per_angstrom2"
EFG_TAG = "V_per_angstrom2"
FIELD_TAG = "V_per_angstrom"


def nuclide_table_path(config: ScenarioConfig) -> str:
    if config.has("species.nuclide_table"):
        return config.resolve_path(config.get("species.nuclide_table"))
    return database.NUCLIDE_TABLE_PATH


def species_from_config(config: ScenarioConfig, label: Optional[str] = None) -> NuclearSpecies:
    """
    Resolve the [species] table.

    Inline data (spin_I, quadrupole_moment, gyromagnetic_ratio) wins; otherwise the label is looked
    up in the nuclide table. An explicit label looks up that nuclide instead.
    """
    table = nuclide_table_path(config)
    if label is not None:
        return database.get_species(label, table)
    if not config.has("species"):
        raise ConfigError("missing [species] table", key="species")
    name = config.get("species.label", "custom")
    if config.has("species.spin_I"):
        return NuclearSpecies(
            label=name,
            spin_I=config.get("species.spin_I"),
            quadrupole_moment=config.si("species.quadrupole_moment", "[area]", default=0.0),
            gyromagnetic_ratio=config.convert("species.gyromagnetic_ratio", "MHz_2pi_per_T", default=0.0)
            * MHZ_2PI,
        )
    if not config.has("species.label"):
        raise ConfigError("species needs a label or inline spin_I", key="species")
    return database.get_species(name, table)


def efg_from_config(config: ScenarioConfig) -> EfgTensor:
    """spin.efg as a 3x3 matrix, or spin.axial_vzz; zero when neither is given."""
    if config.has("spin.efg"):
        matrix = np.asarray(config.convert("spin.efg", EFG_TAG), dtype=float)
        if matrix.shape != (3, 3):
            raise ConfigError("spin.efg must be a 3x3 matrix", key="spin.efg")
        try:
            return EfgTensor(matrix)
        except InvalidArgumentError as e:
            raise ConfigError(str(e), key="spin.efg") from e
    if config.has("spin.axial_vzz"):
        return EfgTensor.axial(config.convert("spin.axial_vzz", EFG_TAG))
    return EfgTensor.zero()


def b_field_from_config(config: ScenarioConfig) -> np.ndarray:
    """spin.b_field in tesla (zero when absent)."""
    if not config.has("spin.b_field"):
        return np.zeros(3)
    b = np.atleast_1d(np.asarray(config.si("spin.b_field"), dtype=float))
    if b.shape != (3,):
        raise ConfigError("spin.b_field must be a 3-vector", key="spin.b_field")
    return b


def _number(config: ScenarioConfig, path: str, default=None):
    value = config.get(path, default)
    if value is None:
        raise ConfigError("missing required key", key=path)
    return float(value)


def cavity_mode(config: ScenarioConfig, section: str, name: str, truncation: int) -> BosonicMode:
    """
    A BosonicMode from [transduction.optical] or [transduction.microwave].

    The mode frequency comes from photon_energy or frequency; the linewidth from kappa or from
    quality_factor (kappa = omega/Q).
    """
    frequency_key = f"{section}.photon_energy" if config.has(f"{section}.photon_energy") \
        else f"{section}.frequency"
    if not config.has(frequency_key):
        raise ConfigError("cavity needs a photon_energy or frequency", key=section)
    omega = config.angular(frequency_key)
    kappa = config.angular(f"{section}.kappa", default=0.0)
    quality = config.get(f"{section}.quality_factor", None)
    volume = config.si(f"{section}.mode_volume", "[volume]", default=None)
    return BosonicMode(
        name=name,
        angular_frequency=omega,
        truncation_dim=truncation,
        kappa=kappa,
        quality_factor=float(quality) if quality is not None else None,
        mode_volume=volume,
        relative_permittivity=_number(config, f"{section}.relative_permittivity", 1.0),
        relative_permeability=_number(config, f"{section}.relative_permeability", 1.0),
    )


def ensemble_size(config: ScenarioConfig, section: str, mode_volume: Optional[float]) -> float:
    """N from size_N, or density times the mode volume."""
    if config.has(f"{section}.size_N"):
        return _number(config, f"{section}.size_N")
    if config.has(f"{section}.density"):
        if mode_volume is None:
            raise ConfigError("an ensemble density needs the optical mode_volume", key=f"{section}.density")
        return config.si(f"{section}.density") * mode_volume
    raise ConfigError("ensemble needs size_N or density", key=section)


def transduction_params(config: ScenarioConfig, dt: Optional[float] = None,
                        stride: Optional[int] = None) -> TransductionParams:
    """
    Build TransductionParams from [transduction] and [integrator].

    G_o and G_m may be given directly; any that is missing is derived from the cavities, the
    ensemble size, the pump field and the single-spin couplings.

    Args:
        config: Scenario
        dt: Overrides integrator.dt
        stride: Overrides integrator.stride
    """
    if not config.has("transduction"):
        raise ConfigError("missing [transduction] table", key="transduction")
    t = "transduction"
    truncation = config.get(f"{t}.truncation", 3)
    optical = cavity_mode(config, f"{t}.optical", "optical", truncation)
    mw = cavity_mode(config, f"{t}.microwave", "mw", truncation)
    durations = None
    if config.has(f"{t}.stage_durations"):
        durations = tuple(float(x) for x in np.atleast_1d(config.si(f"{t}.stage_durations", "[time]")))
    options = dict(
        truncation=truncation,
        direction=config.get(f"{t}.direction", "optical_to_mw"),
        mode=config.get(f"{t}.mode", "swap"),
        stage_durations=durations,
        dt=dt if dt is not None else config.si("integrator.dt", "[time]", default=None),
        record_stride=stride if stride is not None else config.get("integrator.stride", 1),
    )
    gamma_n = config.angular(f"{t}.gamma_n", default=0.0)
    delta = config.angular(f"{t}.delta", default=0.0)
    try:
        if config.has(f"{t}.G_o") and config.has(f"{t}.G_m"):
            return TransductionParams(
                G_o=config.angular(f"{t}.G_o"),
                G_m=config.angular(f"{t}.G_m"),
                kappa_o=optical.kappa,
                kappa_m=mw.kappa,
                gamma_n=gamma_n,
                delta=delta,
                **options,
            )
        g_m = config.si(f"{t}.g_m") if config.has(f"{t}.g_m") else species_from_config(config).gyromagnetic_ratio
        spin = CollectiveSpinMode(
            detuning_delta=delta,
            relaxation_gamma_n=gamma_n,
            ensemble_size_N=ensemble_size(config, f"{t}.ensemble", optical.mode_volume),
            g_o=config.convert(f"{t}.d_effective", D_TAG),
            g_m=g_m,
        )
        params = transduction_params_from_modes(optical, spin, mw, config.convert(f"{t}.pump_field", FIELD_TAG),
                                                **options)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), key=t) from e
    overrides = {}
    if config.has(f"{t}.G_o"):
        overrides["G_o"] = config.angular(f"{t}.G_o")
    if config.has(f"{t}.G_m"):
        overrides["G_m"] = config.angular(f"{t}.G_m")
    return params.with_changes(**overrides) if overrides else params


def material_from_config(config: ScenarioConfig) -> MaterialOptics:
    m = "feasibility.material"
    if not config.has(m):
        raise ConfigError("missing [feasibility.material] table", key=m)
    return MaterialOptics(
        bandgap_Eg=config.convert(f"{m}.bandgap", "eV"),
        two_photon_beta=config.si(f"{m}.two_photon_beta"),
        thermal_conductivity_kth=config.si(f"{m}.thermal_conductivity"),
        refractive_index_n=_number(config, f"{m}.refractive_index"),
        relative_permittivity_eps_r=_number(config, f"{m}.relative_permittivity", 1.0),
        effective_mass=_number(config, f"{m}.effective_mass_ratio", 1.0) * ELECTRON_MASS,
    )


def laser_from_config(config: ScenarioConfig) -> LaserField:
    f = "feasibility.laser"
    if not config.has(f):
        raise ConfigError("missing [feasibility.laser] table", key=f)
    return LaserField(
        amplitude_E=config.si(f"{f}.amplitude", "[electric_potential] / [length]"),
        angular_frequency=config.angular(f"{f}.photon_energy"),
        linewidth_kappa=config.angular(f"{f}.linewidth", default=0.0),
    )


def geometry_from_config(config: ScenarioConfig) -> SampleGeometry:
    g = "feasibility.geometry"
    if not config.has(g):
        raise ConfigError("missing [feasibility.geometry] table", key=g)
    return SampleGeometry(
        depth_d=config.si(f"{g}.depth", "[length]"),
        transverse_area=config.si(f"{g}.transverse_area", "[area]", default=None),
    )


def collective_zero_point(config: ScenarioConfig, section: str) -> Dict[str, float]:
    """
    N and E_zpf for a dispersive block.

    With an ensemble density only, sqrt(N) E_zpf is independent of the mode volume, so N = 1 and
    E_zpf carries the whole collective factor.
    """
    omega = config.angular(f"{section}.photon_energy")
    eps_r = _number(config, f"{section}.relative_permittivity", 1.0)
    volume = config.si(f"{section}.mode_volume", "[volume]", default=None)
    ensemble = f"{section}.ensemble"
    if config.has(f"{ensemble}.density") and volume is None:
        density = config.si(f"{ensemble}.density")
        return {"N": 1.0, "e_zpf": collective_field_density(density, omega, eps_r)}
    if volume is None:
        raise ConfigError("mode_volume is required with size_N", key=f"{section}.mode_volume")
    return {
        "N": ensemble_size(config, ensemble, volume),
        "e_zpf": zero_point_electric_field(omega, eps_r, volume),
    }
