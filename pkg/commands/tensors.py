"""
Tensors Command
Handles the `tensors` subcommand: fitted, closed-form and sum-over-states C and D tensors.
"""

import logging
from typing import Dict, Optional

import numpy as np

from utils import database
from utils.builders import species_from_config
from utils.cli_utils import format_table, output_path, require_config, status
from utils.config import ScenarioConfig
from utils.errors import ConfigError
from utils.tensor_models import (
    BOHR_RADIUS_ANGSTROM,
    c_closed_form,
    c_tensor_perturbation,
    d_closed_form,
    d_tensor_perturbation,
    fit_response_tensors,
    mirror_symmetry_report,
)

logger = logging.getLogger(__name__)

CLOSED_FORM_HEADER = ["system", "species", "order", "value", "magnitude", "reference_value", "ratio"]


def _closed_form_row(config: ScenarioConfig, index: int, row: Dict) -> Dict:
    key = f"tensors.closed_form[{index}]"
    for name in ("system", "species", "order", "e_gap"):
        if name not in row:
            raise ConfigError("missing required key", key=f"{key}.{name}")
    species = species_from_config(config, row["species"])
    sub = config.with_value("tensors.e_gap", row["e_gap"])
    e_gap = sub.convert("tensors.e_gap", "eV")
    a0 = BOHR_RADIUS_ANGSTROM
    if "a0" in row:
        a0 = config.with_value("tensors.a0", row["a0"]).convert("tensors.a0", "angstrom")
    if row["order"] == 1:
        value = c_closed_form(species, e_gap, a0)
    elif row["order"] == 2:
        omega = 0.0
        if "omega_pump" in row:
            omega = config.with_value("tensors.omega_pump", row["omega_pump"]).convert("tensors.omega_pump", "eV")
        value = d_closed_form(species, e_gap, omega, a0)
    else:
        raise ConfigError("order must be 1 (C) or 2 (D)", key=f"{key}.order")
    result = {
        "species": species.label,
        "order": row["order"],
        "value": value,
        "magnitude": abs(value),
    }
    if "reference_value" in row:
        result["reference_value"] = float(row["reference_value"])
        result["ratio"] = abs(value) / float(row["reference_value"])
    return result


def _level_model_block(config: ScenarioConfig, species) -> Dict:
    model = database.load_level_model(config.resolve_path(config.get("tensors.level_model")))
    omega1 = config.convert("tensors.omega1", "eV", default=0.0)
    omega2 = config.convert("tensors.omega2", "eV", default=0.0)
    return {
        "omega1_eV": omega1,
        "omega2_eV": omega2,
        "C": c_tensor_perturbation(model, species, omega1).to_dict(),
        "D": d_tensor_perturbation(model, species, omega1, omega2).to_dict(),
    }


def tensors_report(config: ScenarioConfig, series_path: Optional[str] = None) -> Dict:
    """
    Build the tensor report for a scenario.

    Args:
        config: Scenario with a [tensors] table
        series_path: Overrides tensors.series

    Returns:
        JSON-ready dictionary with any of "fit", "mirror", "closed_form", "sum_over_states"
    """
    if not config.has("tensors"):
        raise ConfigError("missing [tensors] table", key="tensors")
    report: Dict = {"scenario": config.name}
    species = species_from_config(config) if config.has("species") else None

    path = series_path or (config.resolve_path(config.get("tensors.series")) if config.has("tensors.series") else None)
    if path is not None:
        series = database.load_efg_series(path, species, nuclide_table=database.NUCLIDE_TABLE_PATH)
        species = series.species
        fit = fit_response_tensors(series, config.get("tensors.fit_order", 2))
        report["species"] = species.to_dict()
        report["fit"] = fit.to_dict()
        report["fit"]["D_max_abs"] = float(np.max(np.abs(fit.d.d)))
        report["fit"]["C_max_abs"] = float(np.max(np.abs(fit.c.c)))
        if config.has("tensors.mirror_axis"):
            report["mirror"] = mirror_symmetry_report(series, config.get("tensors.mirror_axis")).to_dict()

    if species is not None and config.has("tensors.e_gap"):
        e_gap = config.convert("tensors.e_gap", "eV")
        a0 = config.convert("tensors.a0", "angstrom", default=BOHR_RADIUS_ANGSTROM)
        comparison = {"e_gap_eV": e_gap, "a0_angstrom": a0, "C": c_closed_form(species, e_gap, a0)}
        if config.has("tensors.omega_pump"):
            comparison["D"] = d_closed_form(species, e_gap, config.convert("tensors.omega_pump", "eV"), a0)
        report["closed_form_comparison"] = comparison

    if config.has("tensors.level_model"):
        if species is None:
            raise ConfigError("sum-over-states needs a [species] table", key="species")
        report["sum_over_states"] = _level_model_block(config, species)

    rows = config.get("tensors.closed_form", [])
    if rows:
        report["closed_form"] = {row.get("system", f"row{k}"): _closed_form_row(config, k, row)
                                 for k, row in enumerate(rows)}
    logger.info("tensor report for %s: %s", config.name, ", ".join(k for k in report if k != "scenario"))
    return report


class Tensors:
    """The `tensors` subcommand."""

    name = "tensors"
    help = "Fit C/D tensors from an EFG series and compare with closed forms"

    def add_arguments(self, parser):
        parser.add_argument("--series", help="EFG-vs-field CSV (overrides tensors.series)")

    def __call__(self, args) -> int:
        config = require_config(args)
        report = tensors_report(config, args.series)
        path = output_path(args, config, "report", "tensors.json")
        database.save_report(path, report)

        if "fit" in report:
            fit = report["fit"]
            print(f"Fit along {', '.join(fit['axes'])} (order {fit['fit_order']})")
            print(format_table(["component", "value"], sorted(fit["D"].items())))
            print(f"   max |D| = {fit['D_max_abs']:.6g} x 2pi MHz/(V/A)^2")
        if "mirror" in report:
            mirror = report["mirror"]
            print(status(mirror["consistent"], f"mirror {mirror['mirror_axis']} symmetry"))
        if "closed_form_comparison" in report:
            comparison = report["closed_form_comparison"]
            print(f"   closed-form C = {comparison['C']:.6g}, D = {comparison.get('D', float('nan')):.6g}")
        if "closed_form" in report:
            rows = [[name, r["species"], r["order"], r["value"], r["magnitude"],
                     r.get("reference_value", ""), r.get("ratio", "")]
                    for name, r in report["closed_form"].items()]
            print(format_table(CLOSED_FORM_HEADER, rows))
            database.save_table(output_path(args, config, "summary", "closed_form.csv"), CLOSED_FORM_HEADER, rows)
        print(status(True, f"wrote {path}"))
        return 0


def setup(subparsers):
    """Setup function for the command module."""
    command = Tensors()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
