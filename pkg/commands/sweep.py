"""
Sweep Command
Handles the `sweep` subcommand: one transduction run per value of a scenario parameter.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional

from commands.simulate import simulate_report
from utils import database
from utils.cli_utils import format_table, output_path, require_config, status, worker_count
from utils.config import ScenarioConfig, SweepSpec

logger = logging.getLogger(__name__)

MONOTONE_TOLERANCE = 1e-9
POINT_COLUMNS = ["fidelity", "state_fidelity", "pop_optical", "pop_spin", "pop_mw"]


def _run_point(config: ScenarioConfig, stride: Optional[int] = None) -> Dict[str, float]:
    _, summary = simulate_report(config, stride, check_truncation=False)
    final = summary["final_populations"]
    return {
        "fidelity": summary["fidelity"],
        "state_fidelity": summary["state_fidelity"],
        "pop_optical": final["optical"],
        "pop_spin": final["spin"],
        "pop_mw": final["mw"],
    }


def run_points(configs: List[ScenarioConfig], workers: int = 1, stride: Optional[int] = None) -> List[Dict]:
    """
    Run every scenario, results in input order.

    Args:
        configs: One scenario per sweep point
        workers: Process pool size; 1 runs inline
    """
    if workers <= 1 or len(configs) <= 1:
        return [_run_point(c, stride) for c in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(_run_point, configs, [stride] * len(configs)))


def sweep_report(config: ScenarioConfig, spec: Optional[SweepSpec] = None, workers: int = 1,
                 stride: Optional[int] = None) -> Dict:
    """
    Sweep one parameter of a transduction scenario.

    Returns:
        JSON-ready dictionary; rows holds one entry per value in input order
    """
    spec = spec or SweepSpec.from_config(config)
    points = spec.apply(config)
    logger.info("sweeping %s over %d values with %d worker(s)", spec.parameter, len(points), workers)
    results = run_points(points, workers, stride)
    rows = [{"value": value, **result} for value, result in zip(spec.values, results)]
    fidelities = [row["fidelity"] for row in rows]
    return {
        "scenario": config.name,
        "parameter": spec.parameter,
        "unit": spec.unit,
        "rows": rows,
        "monotone_non_increasing": all(b <= a + MONOTONE_TOLERANCE for a, b in zip(fidelities, fidelities[1:])),
        "fidelity_first": fidelities[0],
        "fidelity_last": fidelities[-1],
    }


def sweep_rows(report: Dict) -> List[List[float]]:
    return [[row["value"]] + [row[name] for name in POINT_COLUMNS] for row in report["rows"]]


class Sweep:
    """The `sweep` subcommand."""

    name = "sweep"
    help = "Sweep a scenario parameter; write one CSV row per value"

    def add_arguments(self, parser):
        parser.add_argument("--parameter", help="Dotted parameter path (overrides sweep.parameter)")
        parser.add_argument("--values", type=float, nargs="+", help="Values to sweep (overrides the scenario)")
        parser.add_argument("--unit", help="Unit tag of --values")

    def __call__(self, args) -> int:
        config = require_config(args)
        spec = None
        if args.values:
            parameter = args.parameter or config.get("sweep.parameter")
            unit = args.unit or config.get(f"{parameter}.unit")
            spec = SweepSpec(parameter, list(args.values), unit)
        report = sweep_report(config, spec, worker_count(args), args.stride)

        header = [f"{report['parameter']} [{report['unit']}]"] + POINT_COLUMNS
        rows = sweep_rows(report)
        path = output_path(args, config, "sweep", "sweep.csv")
        database.save_table(path, header, rows)
        print(format_table(header, rows))
        print(status(report["monotone_non_increasing"], "fidelity non-increasing along the sweep"))
        print(status(True, f"wrote {path}"))
        return 0


def setup(subparsers):
    """Setup function for the command module."""
    command = Sweep()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
