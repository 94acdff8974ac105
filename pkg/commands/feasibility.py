"""
Feasibility Command
Handles the `feasibility` subcommand: heating, ionization, readout and linewidth budgets.
"""

import logging
import math
from typing import Dict, Optional

from utils import database
from utils.builders import (
    D_TAG,
    FIELD_TAG,
    collective_zero_point,
    geometry_from_config,
    laser_from_config,
    material_from_config,
)
from utils.cli_utils import output_path, require_config, status
from utils.config import ScenarioConfig
from utils.dynamics import cavity_suppression_factor, collective_optical_coupling
from utils.constants import MHZ_2PI, V_PER_ANGSTROM
from utils.errors import ConfigError
from utils.feasibility import (
    KELDYSH_THRESHOLD,
    SQRT_EXPONENT,
    absorbed_power_density,
    classify_keldysh,
    dispersive_shift,
    incident_power_density,
    keldysh_parameter,
    linewidth_budget_check,
    single_spin_emission_rate,
    temperature_rise,
    two_photon_penetration_depth,
)

logger = logging.getLogger(__name__)

DEFAULT_HEATING_THRESHOLD_K = 20.0
TWO_PI = 2 * math.pi


def _finite(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def _heating_block(config: ScenarioConfig) -> Dict:
    material = material_from_config(config)
    laser = laser_from_config(config)
    geometry = geometry_from_config(config)
    threshold = config.si("feasibility.heating_threshold", "[temperature]", default=DEFAULT_HEATING_THRESHOLD_K)

    p_in = incident_power_density(laser)
    d_p = two_photon_penetration_depth(material, laser)
    absorbed = absorbed_power_density(p_in, geometry, d_p)
    delta_t = temperature_rise(material, laser, geometry)
    total_power = None if geometry.transverse_area is None else absorbed.exact * geometry.transverse_area

    exponent = config.get("feasibility.keldysh_exponent", SQRT_EXPONENT)
    gamma_threshold = float(config.get("feasibility.keldysh_threshold", KELDYSH_THRESHOLD))
    gamma = keldysh_parameter(material, laser, exponent)
    return {
        "heating": {
            "P_in_W_per_m2": p_in,
            "penetration_depth_m": _finite(d_p),
            "depth_over_penetration": geometry.depth_d / d_p,
            "uniform_field": geometry.depth_d < d_p,
            "P_abs_exact_W_per_m2": absorbed.exact,
            "P_abs_linearized_W_per_m2": absorbed.linearized,
            "P_abs_total_W": total_power,
            "delta_T_K": delta_t,
            "threshold_K": threshold,
            "passed": delta_t <= threshold,
        },
        "keldysh": {
            "gamma": _finite(gamma),
            "exponent": exponent,
            "threshold": gamma_threshold,
            "tunnelling_negligible": classify_keldysh(gamma, gamma_threshold),
        },
    }


def _readout_block(config: ScenarioConfig) -> Dict:
    r = "feasibility.readout"
    rate = single_spin_emission_rate(
        g_o=config.convert(f"{r}.d_effective", D_TAG),
        pump_field=config.convert(f"{r}.pump_field", FIELD_TAG),
        omega_o1=config.angular(f"{r}.photon_energy"),
        eps_r=float(config.get(f"{r}.relative_permittivity", 1.0)),
        mode_volume=config.si(f"{r}.mode_volume", "[volume]"),
        quality_factor=float(config.get(f"{r}.quality_factor")),
    )
    return {"emission_rate_Hz": rate}


def _dispersive_block(config: ScenarioConfig) -> Dict:
    s = "feasibility.dispersive"
    delta = config.angular(f"{s}.delta")
    alpha = config.angular(f"{s}.anharmonicity")
    if config.has(f"{s}.G"):
        coupling = config.angular(f"{s}.G")
        # unit pump and N = 1 so the collective coupling is G itself
        zeta = dispersive_shift(coupling / MHZ_2PI, 1.0, 1.0, V_PER_ANGSTROM, delta, alpha)
    else:
        zero_point = collective_zero_point(config, s)
        g_o = config.convert(f"{s}.d_effective", D_TAG)
        pump = config.convert(f"{s}.pump_field", FIELD_TAG)
        zeta = dispersive_shift(g_o, zero_point["N"], pump, zero_point["e_zpf"], delta, alpha)
        coupling = collective_optical_coupling(g_o, zero_point["N"], pump, zero_point["e_zpf"])
    return {"G_o_Hz": coupling / TWO_PI, "zeta_rad_per_s": zeta, "zeta_Hz": zeta / TWO_PI}


def _pump_linewidth(config: ScenarioConfig) -> float:
    if not config.has("feasibility.laser"):
        return 0.0
    return laser_from_config(config).linewidth_kappa


def _rabi_block(config: ScenarioConfig) -> Dict:
    s = "feasibility.rabi"
    budget = linewidth_budget_check(
        f_rabi=config.angular(f"{s}.f_rabi"),
        detune=config.angular(f"{s}.detune", default=0.0),
        kappa1=config.angular(f"{s}.kappa1", default=_pump_linewidth(config)),
        kappa2=config.angular(f"{s}.kappa2", default=0.0),
        threshold=float(config.get(f"{s}.threshold", 1.0)),
    )
    return budget.to_dict()


def _suppression_block(config: ScenarioConfig) -> Dict:
    s = "feasibility.suppression"
    return {"factor": cavity_suppression_factor(config.angular(f"{s}.delta_GE"), config.angular(f"{s}.kappa_o"))}


def feasibility_report(config: ScenarioConfig) -> Dict:
    """
    Run every configured budget.

    The material, laser and geometry blocks are required; readout, dispersive, rabi and
    suppression are reported when present.

    Returns:
        JSON-ready dictionary with a top-level "passed" flag
    """
    if not config.has("feasibility.material"):
        raise ConfigError("missing [feasibility.material] table", key="feasibility.material")
    report: Dict = {"scenario": config.name}
    report.update(_heating_block(config))
    optional = {
        "readout": _readout_block,
        "dispersive": _dispersive_block,
        "rabi": _rabi_block,
        "suppression": _suppression_block,
    }
    for name, block in optional.items():
        if config.has(f"feasibility.{name}"):
            report[name] = block(config)
    report["passed"] = (report["heating"]["passed"] and report["keldysh"]["tunnelling_negligible"]
                        and report.get("rabi", {}).get("passed", True))
    logger.info("feasibility for %s: delta T = %.4g K, gamma = %s", config.name,
                report["heating"]["delta_T_K"], report["keldysh"]["gamma"])
    return report


class Feasibility:
    """The `feasibility` subcommand."""

    name = "feasibility"
    help = "Heating, Keldysh, readout and linewidth budgets with pass/fail flags"

    def add_arguments(self, parser):
        pass

    def __call__(self, args) -> int:
        config = require_config(args)
        report = feasibility_report(config)
        path = output_path(args, config, "report", "feasibility.json")
        database.save_report(path, report)

        heating = report["heating"]
        keldysh = report["keldysh"]
        print(status(heating["passed"], f"Delta T = {heating['delta_T_K']:.4g} K (limit {heating['threshold_K']:.4g} K)"))
        gamma = keldysh["gamma"]
        print(status(keldysh["tunnelling_negligible"],
                     f"Keldysh gamma = {gamma:.4g}" if gamma is not None else "Keldysh gamma = inf (no field)"))
        if "readout" in report:
            print(f"   single-spin emission rate R = {report['readout']['emission_rate_Hz']:.4g} Hz")
        if "dispersive" in report:
            print(f"   dispersive shift zeta = {report['dispersive']['zeta_Hz'] / 1e3:.4g} kHz")
        if "rabi" in report:
            print(status(report["rabi"]["passed"], f"linewidth budget, efficiency {report['rabi']['efficiency']:.4g}"))
        if "suppression" in report:
            print(f"   cavity suppression factor r = {report['suppression']['factor']:.4g}")
        print(status(True, f"wrote {path}"))
        return 0


def setup(subparsers):
    """Setup function for the command module."""
    command = Feasibility()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
