"""
Spin Command
Handles the `spin` subcommand: level structure of one nucleus in its EFG and magnetic field.
"""

import logging
import math
from typing import Dict

from utils import database
from utils.builders import b_field_from_config, efg_from_config, species_from_config
from utils.cli_utils import output_path, require_config, status
from utils.config import ScenarioConfig
from utils.spin_core import (
    efg_principal_frame,
    quadrupole_coupling_constant,
    quadrupole_tensor,
    spin_levels,
    spin_operators,
    static_hamiltonian,
)

logger = logging.getLogger(__name__)

NO_QUADRUPOLE_NOTICE = "no quadrupole structure: I = 1/2 nuclei do not couple to the EFG"


def spin_report(config: ScenarioConfig) -> Dict:
    """
    Eigenvalues, Delta_ge and C_q for the configured nucleus.

    Returns:
        JSON-ready dictionary
    """
    species = species_from_config(config)
    efg = efg_from_config(config)
    b_field = b_field_from_config(config)
    ops = spin_operators(species.spin_I)
    report = {
        "scenario": config.name,
        "species": species.to_dict(),
        "b_field_T": [float(b) for b in b_field],
        "efg_V_per_angstrom2": efg.v.tolist(),
    }

    quad = None
    if species.has_quadrupole:
        quad = quadrupole_tensor(species, efg)
        values, axes, eta = efg_principal_frame(efg)
        report["efg_principal_values"] = [float(v) for v in values]
        report["efg_principal_axes"] = axes.tolist()
        report["asymmetry_eta"] = eta
        report["C_q_Hz"] = quadrupole_coupling_constant(species, efg)
    else:
        report["notice"] = NO_QUADRUPOLE_NOTICE

    levels = spin_levels(static_hamiltonian(species, b_field, quad, ops))
    report.update(levels.to_dict())
    if quad is not None and report["C_q_Hz"] != 0.0:
        report["delta_ge_over_C_q"] = levels.delta_ge / (2 * math.pi) / abs(report["C_q_Hz"])
    logger.info("spin levels for %s: %d distinct, Delta_ge = %.6g Hz", species.label,
                len(report["distinct_levels_2pi_MHz"]), report["delta_ge_Hz"])
    return report


class Spin:
    """The `spin` subcommand."""

    name = "spin"
    help = "Level structure, Delta_ge and C_q of one nucleus"

    def add_arguments(self, parser):
        pass

    def __call__(self, args) -> int:
        config = require_config(args)
        report = spin_report(config)
        path = output_path(args, config, "report", "spin.json")
        database.save_report(path, report)

        print(f"Nucleus {report['species']['label']} (I = {report['species']['spin_I']})")
        if "notice" in report:
            print(f"   {report['notice']}")
        else:
            print(f"   C_q = {report['C_q_Hz'] / 1e6:.6g} MHz, eta = {report['asymmetry_eta']:.4f}")
        for k, level in enumerate(report["distinct_levels_2pi_MHz"]):
            print(f"   level {k}: {level:.6g} x 2pi MHz")
        print(f"   Delta_ge = {report['delta_ge_Hz'] / 1e6:.6g} MHz")
        print(status(True, f"wrote {path}"))
        return 0


def setup(subparsers):
    """Setup function for the command module."""
    command = Spin()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
