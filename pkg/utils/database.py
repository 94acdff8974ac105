"""
Data file utilities for ONQ Lab.
Handles reading the nuclide table, EFG-series and level-model files, and writing trajectories,
sweeps and JSON reports.
"""

import csv
import json
import os
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from models.species import EfgTensor, NuclearSpecies
from models.system import SimResult
from models.tensors import ElectronicLevelModel, EfgFieldSeries
from utils.errors import DataFileError, InvalidArgumentError, OnqError

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
NUCLIDE_TABLE_PATH = os.path.join(ROOT_DIR, "data", "nuclides.csv")
SCENARIO_DIR = os.path.join(ROOT_DIR, "scenarios")
EXPECTATIONS_PATH = os.path.join(SCENARIO_DIR, "expectations.json")

NUCLIDE_HEADER = ["label", "spin_I", "quadrupole_moment_barn", "gyromagnetic_2pi_MHz_per_T"]
SERIES_HEADER = ["Ex", "Ey", "Ez", "Vxx", "Vyy", "Vzz", "Vxy", "Vxz", "Vyz"]
TRAJECTORY_HEADER = ["t_s", "pop_optical", "pop_spin", "pop_mw", "trace", "fidelity_running"]
SPECIES_TAG = "# species="


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(value))


def _open_for_read(path: str):
    if not os.path.exists(path):
        raise DataFileError("file not found", path=path)
    return open(path, "r", encoding="utf-8", newline="")


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def load_nuclide_table(path: str = NUCLIDE_TABLE_PATH) -> Dict[str, NuclearSpecies]:
    """
    Load the nuclide table.

    Args:
        path: CSV with header label,spin_I,quadrupole_moment_barn,gyromagnetic_2pi_MHz_per_T

    Returns:
        Dictionary mapping labels to NuclearSpecies
    """
    table = {}
    with _open_for_read(path) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != NUCLIDE_HEADER:
            raise DataFileError(f"expected header {','.join(NUCLIDE_HEADER)}", path=path, row=1)
        for row_number, row in enumerate(reader, start=2):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != len(NUCLIDE_HEADER):
                raise DataFileError(f"expected {len(NUCLIDE_HEADER)} columns", path=path, row=row_number)
            try:
                species = NuclearSpecies.from_table_units(row[0].strip(), float(row[1]), float(row[2]), float(row[3]))
            except (ValueError, OnqError) as e:
                raise DataFileError(str(e), path=path, row=row_number) from e
            table[species.label] = species
    return table


def get_species(label: str, path: str = NUCLIDE_TABLE_PATH) -> NuclearSpecies:
    """
    Look up one nuclide.

    Raises:
        InvalidArgumentError if the label is not in the table
    """
    table = load_nuclide_table(path)
    if label not in table:
        raise InvalidArgumentError(f"unknown nuclide '{label}' (known: {', '.join(sorted(table))})")
    return table[label]


def load_efg_series(path: str, species: Optional[NuclearSpecies] = None,
                    nuclide_table: str = NUCLIDE_TABLE_PATH) -> EfgFieldSeries:
    """
    Load an EFG-vs-field series.

    Args:
        path: CSV with header Ex,Ey,Ez,Vxx,Vyy,Vzz,Vxy,Vxz,Vyz and a "# species=<label>" line
        species: Overrides the species named in the file
        nuclide_table: Table used to resolve the species label

    Returns:
        EfgFieldSeries
    """
    label = None
    rows = []
    header_seen = False
    with _open_for_read(path) as f:
        reader = csv.reader(f, skipinitialspace=True)
        for row in reader:
            row_number = reader.line_num
            cells = [cell.strip() for cell in row]
            if not any(cells):
                continue
            if cells[0].startswith(SPECIES_TAG):
                label = cells[0][len(SPECIES_TAG):].strip()
                continue
            if cells[0].startswith("#"):
                continue
            if not header_seen:
                if cells != SERIES_HEADER:
                    raise DataFileError(f"expected header {','.join(SERIES_HEADER)}", path=path, row=row_number)
                header_seen = True
                continue
            if len(cells) != len(SERIES_HEADER):
                raise DataFileError(f"expected {len(SERIES_HEADER)} columns", path=path, row=row_number)
            try:
                values = [float(cell) for cell in cells]
                efg = EfgTensor.from_components(dict(zip(("xx", "yy", "zz", "xy", "xz", "yz"), values[3:])))
            except (ValueError, OnqError) as e:
                raise DataFileError(str(e), path=path, row=row_number) from e
            rows.append((values[:3], efg))
    if not header_seen or not rows:
        raise DataFileError("no data rows", path=path)
    if species is None:
        if label is None:
            raise DataFileError("missing '# species=<label>' line", path=path)
        try:
            species = get_species(label, nuclide_table)
        except InvalidArgumentError as e:
            raise DataFileError(str(e), path=path) from e
    return EfgFieldSeries.from_rows(species, rows)


def save_efg_series(path: str, series: EfgFieldSeries):
    """Write a series in the format read by load_efg_series."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{SPECIES_TAG}{series.species.label}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SERIES_HEADER)
        components = series.component_matrix(np.arange(len(series)))
        for field, values in zip(series.fields, components):
            writer.writerow([format_float(x) for x in list(field) + list(values)])


def load_level_model(path: str) -> ElectronicLevelModel:
    """Load a level model from JSON (energies, occupations, linewidth_eta, dipole, efg blocks)."""
    with _open_for_read(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFileError(f"invalid JSON: {e.msg}", path=path, row=e.lineno) from e
    try:
        return ElectronicLevelModel.from_dict(data)
    except (KeyError, ValueError) as e:
        raise DataFileError(f"invalid level model: {e}", path=path) from e


def save_level_model(path: str, model: ElectronicLevelModel):
    save_report(path, model.to_dict())


def save_trajectory(path: str, result: SimResult):
    """
    Write a trajectory CSV.

    Args:
        path: Output file
        result: Simulation result; one row per recorded time
    """
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for row in result.rows():
            writer.writerow([format_float(x) for x in row])


def save_table(path: str, header: Sequence[str], rows: Iterable[Sequence[float]]):
    """Write a numeric CSV table with shortest round-trip floats."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_float(x) if isinstance(x, (float, int, np.floating)) and not isinstance(x, bool)
                             else str(x) for x in row])


def load_table(path: str) -> List[Dict[str, str]]:
    with _open_for_read(path) as f:
        return list(csv.DictReader(f))


def save_report(path: str, data: Dict):
    """Write a JSON report, creating the directory if needed."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def load_report(path: str) -> Dict:
    with _open_for_read(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise DataFileError(f"invalid JSON: {e.msg}", path=path, row=e.lineno) from e


def load_expectations(path: str = EXPECTATIONS_PATH) -> Dict[str, Dict]:
    """Stored regression expectations: scenario -> metric -> {min, max} or {value, rel}."""
    return load_report(path)
