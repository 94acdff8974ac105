"""
Command-line utility functions for ONQ Lab.
"""

import os
from typing import Iterable, List, Optional, Sequence

from utils.config import ScenarioConfig, load_scenario
from utils.errors import ConfigError, InvalidArgumentError

WORKERS_ENV = "ONQ_SIM_WORKERS"
DEFAULT_OUT_DIR = "out"


def require_config(args) -> ScenarioConfig:
    """
    Load the scenario named by --config.

    Returns:
        ScenarioConfig
    """
    if not getattr(args, "config", None):
        raise ConfigError("this command needs --config <scenario.toml>")
    return load_scenario(args.config)


def output_path(args, config: Optional[ScenarioConfig], key: str, default_name: str) -> str:
    """
    Where a command writes one of its files.

    An output.<key> entry in the scenario wins (relative to --out); otherwise
    <out>/<scenario name>_<default_name>.
    """
    out_dir = getattr(args, "out", None) or DEFAULT_OUT_DIR
    if config is not None and config.has(f"output.{key}"):
        return os.path.join(out_dir, config.get(f"output.{key}"))
    prefix = f"{config.name}_" if config is not None else ""
    return os.path.join(out_dir, f"{prefix}{default_name}")


def worker_count(args) -> int:
    """
    Sweep pool size.

    --workers beats ONQ_SIM_WORKERS, which beats the CPU count.
    """
    requested = getattr(args, "workers", None)
    if requested is None:
        env = os.getenv(WORKERS_ENV)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}")
        else:
            requested = os.cpu_count() or 1
    if requested < 1:
        raise InvalidArgumentError(f"worker count must be >= 1, got {requested}")
    return requested


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """
    Render rows as a plain fixed-width text table.

    Args:
        header: Column titles
        rows: Cell values; floats are shown with 6 significant digits

    Returns:
        Multi-line string
    """
    def cell(value) -> str:
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    body: List[List[str]] = [[cell(v) for v in row] for row in rows]
    widths = [len(h) for h in header]
    for row in body:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body)
    return "\n".join(lines)


def status(ok: bool, message: str) -> str:
    return f"{'✅' if ok else '❌'} {message}"
