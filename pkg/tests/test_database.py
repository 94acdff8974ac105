import csv
import os

import numpy as np
import pytest

from models.system import TransductionParams
from utils import database
from utils.constants import MHZ_2PI
from utils.dynamics import run_swap_protocol
from utils.errors import EXIT_IO, DataFileError, InvalidArgumentError

SERIES_PATH = os.path.join(database.SCENARIO_DIR, "wgan_ga69_series.csv")


def test_nuclide_table_has_the_quadrupolar_species():
    table = database.load_nuclide_table()
    for label in ("Ga69", "Ga71", "As75", "Sb121", "Cl35", "N14", "Hf177", "H1"):
        assert label in table
    assert table["Sb121"].quadrupole_moment < 0
    assert table["As75"].spin_I == 1.5


def test_unknown_species():
    with pytest.raises(InvalidArgumentError, match="unknown nuclide"):
        database.get_species("Xx999")


def test_missing_file_is_an_io_error(tmp_path):
    path = str(tmp_path / "absent.csv")
    with pytest.raises(DataFileError) as info:
        database.load_nuclide_table(path)
    assert info.value.exit_code == EXIT_IO
    assert info.value.path == path


def test_bad_nuclide_header(tmp_path):
    path = tmp_path / "nuclides.csv"
    path.write_text("label,spin\nGa69,1.5\n", encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        database.load_nuclide_table(str(path))
    assert info.value.row == 1


def test_bad_nuclide_row_reports_its_number(tmp_path):
    path = tmp_path / "nuclides.csv"
    path.write_text(",".join(database.NUCLIDE_HEADER) + "\nGa69,1.5,0.171,10.247\nBad,0.75,0.1,1.0\n",
                    encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        database.load_nuclide_table(str(path))
    assert info.value.row == 3


def test_series_round_trip(tmp_path):
    series = database.load_efg_series(SERIES_PATH)
    path = str(tmp_path / "series.csv")
    database.save_efg_series(path, series)
    loaded = database.load_efg_series(path)
    assert loaded.species == series.species
    np.testing.assert_array_equal(loaded.fields, series.fields)
    np.testing.assert_array_equal(loaded.efgs, series.efgs)


def test_series_needs_species_line(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text(",".join(database.SERIES_HEADER) + "\n0,0,0,1,1,-2,0,0,0\n", encoding="utf-8")
    with pytest.raises(DataFileError, match="species"):
        database.load_efg_series(str(path))
    loaded = database.load_efg_series(str(path), species=database.get_species("Ga69"))
    assert len(loaded) == 1


def test_series_accepts_quoted_and_spaced_cells(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text("# species=Ga69\n" + ", ".join(database.SERIES_HEADER) + "\n\n"
                    '"0.1", 0, 0, 1, 1, -2, 0.5, 0, 0\n', encoding="utf-8")
    loaded = database.load_efg_series(str(path))
    np.testing.assert_array_equal(loaded.fields, [[0.1, 0.0, 0.0]])
    assert loaded.efgs[0, 0, 1] == 0.5


def test_series_with_traced_efg_names_the_row(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text("# species=Ga69\n" + ",".join(database.SERIES_HEADER) + "\n0,0,0,1,1,-2,0,0,0\n"
                    "0.1,0,0,1,1,1,0,0,0\n", encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        database.load_efg_series(str(path))
    assert info.value.row == 4


def test_invalid_json_report(tmp_path):
    path = tmp_path / "report.json"
    path.write_text("{\n  \"a\": 1,\n}", encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        database.load_report(str(path))
    assert info.value.row == 3


def test_trajectory_file(tmp_path):
    result = run_swap_protocol(TransductionParams(G_o=0.24 * MHZ_2PI, G_m=0.3 * MHZ_2PI, truncation=2,
                                                  record_stride=20))
    path = str(tmp_path / "run" / "trajectory.csv")
    database.save_trajectory(path, result)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == database.TRAJECTORY_HEADER
    assert len(rows) == len(result.times) + 1
    assert float(rows[-1][-1]) == result.fidelity_running[-1]


def test_table_keeps_exact_floats(tmp_path):
    path = str(tmp_path / "table.csv")
    database.save_table(path, ["x", "label", "flag"], [(0.1 + 0.2, "a", True)])
    rows = database.load_table(path)
    assert float(rows[0]["x"]) == 0.1 + 0.2
    assert rows[0]["flag"] == "True"


def test_expectations_cover_every_scenario():
    expectations = database.load_expectations()
    names = {f[:-len(".toml")] for f in os.listdir(database.SCENARIO_DIR) if f.endswith(".toml")}
    assert set(expectations) == names
