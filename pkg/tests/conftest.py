"""
Shared fixtures for the ONQ Lab test suite.
"""

import os

import numpy as np
import pytest

from models.species import NuclearSpecies
from models.system import TransductionParams
from utils import database
from utils.constants import MHZ_2PI
from utils.config import load_scenario

SCENARIO_DIR = database.SCENARIO_DIR


@pytest.fixture
def ga69() -> NuclearSpecies:
    return database.get_species("Ga69")


@pytest.fixture
def spin_half() -> NuclearSpecies:
    return database.get_species("H1")


@pytest.fixture
def swap_params() -> TransductionParams:
    """Reference swap-protocol rates with kappa_o = (1 eV/hbar)/1e10 and kappa_m = 2pi 1 GHz/1e5."""
    return TransductionParams(
        G_o=0.24 * MHZ_2PI,
        G_m=0.3 * MHZ_2PI,
        kappa_o=1.519267e5,
        kappa_m=0.01 * MHZ_2PI,
        gamma_n=0.001 * MHZ_2PI,
        record_stride=5,
    )


@pytest.fixture
def scenario():
    """Load a golden scenario by name."""
    def load(name: str):
        return load_scenario(os.path.join(SCENARIO_DIR, f"{name}.toml"))
    return load


@pytest.fixture
def write_scenario(tmp_path):
    """Write TOML text to a temporary scenario file and return its path."""
    def write(text: str, name: str = "scenario.toml") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)
