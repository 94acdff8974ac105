"""
Simulate Command
Handles the `simulate` subcommand: one transduction run written as a trajectory and a summary.
"""

import logging
from typing import Dict, Optional, Tuple

from models.system import SimResult
from utils import database
from utils.builders import transduction_params
from utils.cli_utils import output_path, require_config, status
from utils.config import ScenarioConfig
from utils.dynamics import run_swap_protocol, truncation_sensitivity

logger = logging.getLogger(__name__)


def simulate_report(config: ScenarioConfig, stride: Optional[int] = None,
                    check_truncation: bool = True) -> Tuple[SimResult, Dict]:
    """
    Run the configured protocol.

    Args:
        config: Scenario with a [transduction] table
        stride: Overrides integrator.stride
        check_truncation: Rerun at twice the Fock truncation and report the fidelity change

    Returns:
        (SimResult, JSON-ready summary)
    """
    params = transduction_params(config, stride=stride)
    result = run_swap_protocol(params)
    summary = {
        "scenario": config.name,
        "params": params.to_dict(),
        "stage_durations_s": list(result.stage_durations),
        "target_mode": result.target_mode,
        "fidelity": result.fidelity,
        "state_fidelity": result.state_fidelity,
        "max_trace_drift": result.max_trace_drift,
        "final_populations": {name: float(values[-1]) for name, values in result.populations.items()},
    }
    if check_truncation and len(result.stage_durations) > 0:
        delta, finer = truncation_sensitivity(params, result)
        summary["truncation_delta"] = delta
        summary["fidelity_double_truncation"] = finer.fidelity
        logger.info("truncation %d -> %d changes fidelity by %.3e", params.truncation, 2 * params.truncation, delta)
    return result, summary


class Simulate:
    """The `simulate` subcommand."""

    name = "simulate"
    help = "Run the transduction protocol; write trajectory CSV and summary JSON"

    def add_arguments(self, parser):
        parser.add_argument("--skip-truncation-check", action="store_true",
                            help="Do not rerun at twice the Fock truncation")

    def __call__(self, args) -> int:
        config = require_config(args)
        result, summary = simulate_report(config, args.stride, not args.skip_truncation_check)
        trajectory = output_path(args, config, "trajectory", "trajectory.csv")
        summary_path = output_path(args, config, "summary", "summary.json")
        database.save_trajectory(trajectory, result)
        database.save_report(summary_path, summary)

        print(f"Transduction {summary['params']['direction']} ({summary['params']['mode']})")
        print(f"   fidelity = {summary['fidelity']:.6f}, state fidelity = {summary['state_fidelity']:.6f}")
        if "truncation_delta" in summary:
            print(f"   truncation delta = {summary['truncation_delta']:.3e}")
        print(status(True, f"wrote {trajectory}"))
        print(status(True, f"wrote {summary_path}"))
        return 0


def setup(subparsers):
    """Setup function for the command module."""
    command = Simulate()
    parser = subparsers.add_parser(command.name, help=command.help)
    command.add_arguments(parser)
    parser.set_defaults(handler=command)
