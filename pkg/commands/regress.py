"""
Regress Command
Handles the `regress` subcommand: runs every golden scenario and checks it against the stored
expectations.
"""

import logging
import math
import os
from typing import Any, Dict, List, Optional

from commands.feasibility import feasibility_report
from commands.simulate import simulate_report
from commands.spin import spin_report
from commands.sweep import sweep_report
from commands.tensors import tensors_report
from utils import database
from utils.cli_utils import format_table, output_path, status, worker_count
from utils.config import ScenarioConfig, load_scenario
from utils.errors import EXIT_NUMERICAL, EXIT_OK, InvalidArgumentError

logger = logging.getLogger(__name__)

RESULT_HEADER = ["scenario", "metric", "value", "expected", "passed"]


def lookup(report: Dict, path: str) -> Any:
    """Value at a dotted path; integer parts index into lists."""
    node: Any = report
    for part in path.split("."):
        if isinstance(node, list):
            node = node[int(part)]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise KeyError(path)
    return node


def check_metric(value: Any, expectation: Dict) -> bool:
    """
    Compare one metric with its expectation.

    Accepted forms: {"equals": v}, {"value": v, "rel": r} and {"min": a, "max": b} (either bound optional).
    """
    if "equals" in expectation:
        return value == expectation["equals"]
    if value is None or isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
        return False
    if "value" in expectation:
        target = float(expectation["value"])
        return abs(value - target) <= float(expectation.get("rel", 1e-6)) * abs(target)
    return expectation.get("min", -math.inf) <= value <= expectation.get("max", math.inf)


def describe(expectation: Dict) -> str:
    if "equals" in expectation:
        return f"== {expectation['equals']}"
    if "value" in expectation:
        return f"{expectation['value']:.6g} +/- {100 * expectation.get('rel', 1e-6):.3g}%"
    return f"[{expectation.get('min', '-inf')}, {expectation.get('max', 'inf')}]"


def scenario_report(config: ScenarioConfig, workers: int = 1) -> Dict:
    """The report a golden scenario is checked against, chosen by its kind."""
    if config.kind == "spin":
        return spin_report(config)
    if config.kind == "tensors":
        return tensors_report(config)
    if config.kind == "feasibility":
        return feasibility_report(config)
    if config.has("sweep"):
        return sweep_report(config, workers=workers)
    return simulate_report(config)[1]


def run_regression(expectations: Dict[str, Dict], scenario_dir: str = database.SCENARIO_DIR,
                   only: Optional[List[str]] = None, workers: int = 1) -> List[Dict]:
    """
    Run the golden scenarios named in expectations.

    Args:
        expectations: scenario name -> metric path -> expectation
        scenario_dir: Directory holding <name>.toml files
        only: Restrict to these scenario names

    Returns:
        One row per metric
    """
    names = list(expectations)
    if only:
        unknown = sorted(set(only) - set(names))
        if unknown:
            raise InvalidArgumentError(f"no expectations for {', '.join(unknown)}")
        names = [n for n in names if n in only]
    results = []
    for name in names:
        config = load_scenario(os.path.join(scenario_dir, f"{name}.toml"))
        logger.info("regress: running %s (%s)", name, config.kind)
        report = scenario_report(config, workers)
        for metric, expectation in expectations[name].items():
            try:
                value = lookup(report, metric)
            except (KeyError, IndexError, ValueError):
                value = None
            results.append({
                "scenario": name,
                "metric": metric,
                "value": value,
                "expected": describe(expectation),
                "passed": value is not None and check_metric(value, expectation),
            })
    return results


class Regress:
    """The `regress` subcommand."""

    name = "regress"
    help = "Run all golden scenarios and diff against stored expectations"

    def add_arguments(self, parser):
        parser.add_argument("--expectations", default=database.EXPECTATIONS_PATH,
                            help="Expectations JSON (default: scenarios/expectations.json)")
        parser.add_argument("--only", nargs="+", help="Scenario names to run")

    def __call__(self, args) -> int:
        expectations = database.load_expectations(args.expectations)
        scenario_dir = os.path.dirname(os.path.abspath(args.expectations))
        results = run_regression(expectations, scenario_dir, args.only, worker_count(args))

        rows = [[r["scenario"], r["metric"], "missing" if r["value"] is None else r["value"],
                 r["expected"], r["passed"]] for r in results]
        print(format_table(RESULT_HEADER, rows))
        path = output_path(args, None, "report", "regress.json")
        database.save_report(path, {"results": results})
        failed = [r for r in results if not r["passed"]]
        print(status(not failed, f"{len(results) - len(failed)}/{len(results)} metrics passed"))
        print(status(True, f"wrote {path}"))
        return EXIT_OK if not failed else EXIT_NUMERICAL


def setup(subparsers):
    """Setup function for the command module."""
    command = Regress()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
