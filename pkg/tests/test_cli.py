import argparse
import csv
import json
import os
import shutil

import pytest

import onq
from commands.regress import check_metric, lookup
from commands.sweep import sweep_report
from utils import database
from utils.cli_utils import WORKERS_ENV, worker_count
from utils.config import SweepSpec
from utils.errors import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, ConfigError, InvalidArgumentError

SWEEP_VALUES = ["1.0", "100.0", "1000.0"]


def _scenario_path(name):
    return os.path.join(database.SCENARIO_DIR, f"{name}.toml")


def _run(tmp_path, *argv):
    return onq.main(["--out", str(tmp_path), *argv])


def test_spin_command(tmp_path, capsys):
    assert _run(tmp_path, "--config", _scenario_path("wgan_spin"), "spin") == EXIT_OK
    report = json.loads((tmp_path / "wgan_spin_spin.json").read_text())
    assert report["C_q_Hz"] == pytest.approx(1.3810e6, rel=1e-3)
    assert report["delta_ge_over_C_q"] == pytest.approx(0.5, rel=1e-9)
    assert "✅" in capsys.readouterr().out


def test_spin_half_reports_notice(tmp_path, write_scenario):
    path = write_scenario('[scenario]\nname = "proton"\nkind = "spin"\n\n[species]\nlabel = "H1"\n\n'
                          '[spin]\nb_field = { value = [0.0, 0.0, 1.0], unit = "T" }\n')
    assert _run(tmp_path, "--config", path, "spin") == EXIT_OK
    report = json.loads((tmp_path / "proton_spin.json").read_text())
    assert "notice" in report
    assert report["delta_ge_Hz"] == pytest.approx(42.577e6, rel=1e-9)


def test_tensors_command(tmp_path):
    assert _run(tmp_path, "--config", _scenario_path("wgan_tensors"), "tensors") == EXIT_OK
    report = json.loads((tmp_path / "wgan_tensors_tensors.json").read_text())
    assert report["fit"]["D"]["xx^xx"] == pytest.approx(0.68913, rel=2e-3)
    assert report["mirror"]["consistent"]
    assert report["closed_form_comparison"]["D"] == pytest.approx(5.51534, rel=1e-3)


def test_closed_form_table(tmp_path):
    assert _run(tmp_path, "--config", _scenario_path("ner_closed_form"), "tensors") == EXIT_OK
    with open(tmp_path / "ner_closed_form_closed_form.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["system"] for row in rows] == ["As75_GaAs", "Sb_Si", "Ga69_GaAs", "Cl35_CCl4"]


def test_simulate_command(tmp_path):
    argv = ["--config", _scenario_path("swap_transduction"), "--stride", "50", "simulate"]
    assert _run(tmp_path, *argv) == EXIT_OK
    summary = json.loads((tmp_path / "swap_transduction_summary.json").read_text())
    assert 0.85 <= summary["fidelity"] <= 0.95
    assert summary["truncation_delta"] < 1e-4
    with open(tmp_path / "swap_transduction_trajectory.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == database.TRAJECTORY_HEADER
    assert float(rows[-1][0]) == pytest.approx(sum(summary["stage_durations_s"]))


def test_sweep_command_with_cli_values(tmp_path):
    argv = ["--config", _scenario_path("relaxation_sweep"), "--workers", "1", "sweep",
            "--values", "1.0", "1000.0", "--unit", "kHz_2pi"]
    assert _run(tmp_path, *argv) == EXIT_OK
    with open(tmp_path / "relaxation_sweep_sweep.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 3
    assert float(rows[1][1]) > float(rows[2][1])


def _sweep_csv(out_dir, *extra):
    argv = ["--config", _scenario_path("relaxation_sweep"), *extra, "sweep", "--values", *SWEEP_VALUES,
            "--unit", "kHz_2pi"]
    assert onq.main(["--out", str(out_dir), *argv]) == EXIT_OK
    return (out_dir / "relaxation_sweep_sweep.csv").read_bytes()


def test_repeated_sweeps_are_byte_identical(tmp_path):
    first = _sweep_csv(tmp_path / "first", "--workers", "1")
    second = _sweep_csv(tmp_path / "second", "--workers", "1")
    assert first == second


def test_parallel_sweep_keeps_input_order(tmp_path):
    serial = _sweep_csv(tmp_path / "serial", "--workers", "1")
    parallel = _sweep_csv(tmp_path / "parallel", "--workers", "2")
    assert parallel == serial


def test_reversed_sweep_reverses_rows(scenario):
    config = scenario("relaxation_sweep")
    values = [float(v) for v in SWEEP_VALUES]
    forward = sweep_report(config, SweepSpec("transduction.gamma_n", values, "kHz_2pi"))
    backward = sweep_report(config, SweepSpec("transduction.gamma_n", values[::-1], "kHz_2pi"))
    assert backward["rows"] == forward["rows"][::-1]
    assert forward["monotone_non_increasing"]


def test_feasibility_command(tmp_path):
    assert _run(tmp_path, "--config", _scenario_path("single_spin_readout"), "feasibility") == EXIT_OK
    report = json.loads((tmp_path / "single_spin_readout_feasibility.json").read_text())
    assert report["readout"]["emission_rate_Hz"] == pytest.approx(29.934, rel=1e-3)
    assert report["rabi"]["efficiency"] == 1.0
    assert report["suppression"]["factor"] == pytest.approx(2.5e-7, rel=1e-5)


def test_heating_reports_total_absorbed_power(tmp_path):
    assert _run(tmp_path, "--config", _scenario_path("two_photon_heating"), "feasibility") == EXIT_OK
    heating = json.loads((tmp_path / "two_photon_heating_feasibility.json").read_text())["heating"]
    assert heating["P_abs_total_W"] == pytest.approx(heating["P_abs_exact_W_per_m2"] * 1e-10)
    assert heating["P_abs_total_W"] == pytest.approx(0.1761, rel=1e-3)


def test_pump_linewidth_enters_the_rabi_budget(tmp_path, write_scenario):
    text = open(_scenario_path("single_spin_readout"), encoding="utf-8").read()
    text = text.replace('photon_energy = { value = 1.0, unit = "eV" }\n\n[feasibility.geometry]',
                        'photon_energy = { value = 1.0, unit = "eV" }\n'
                        'linewidth = { value = 2.0, unit = "kHz_2pi" }\n\n[feasibility.geometry]')
    text = text.replace('kappa1 = { value = 0.0, unit = "kHz_2pi" }\n', "")
    assert _run(tmp_path, "--config", write_scenario(text), "feasibility") == EXIT_OK
    rabi = json.loads((tmp_path / "single_spin_readout_feasibility.json").read_text())["rabi"]
    assert not rabi["kappa1_ok"]
    assert rabi["kappa2_ok"]
    assert rabi["efficiency"] == pytest.approx(1.0 / 3.0)
    assert not rabi["passed"]


def test_dispersive_readout(tmp_path):
    assert _run(tmp_path, "--config", _scenario_path("dispersive_readout"), "feasibility") == EXIT_OK
    report = json.loads((tmp_path / "dispersive_readout_feasibility.json").read_text())
    assert report["dispersive"]["G_o_Hz"] == pytest.approx(60158, rel=1e-3)
    assert report["dispersive"]["zeta_Hz"] == pytest.approx(30158, rel=1e-3)


def test_regress_subset(tmp_path):
    argv = ["regress", "--only", "wgan_spin", "two_photon_heating", "keldysh_ionization", "onq_closed_form"]
    assert _run(tmp_path, *argv) == EXIT_OK
    results = json.loads((tmp_path / "regress.json").read_text())["results"]
    assert results and all(r["passed"] for r in results)


def test_regress_failure_is_numerical(tmp_path):
    shutil.copy(_scenario_path("two_photon_heating"), tmp_path / "two_photon_heating.toml")
    expectations = tmp_path / "expectations.json"
    expectations.write_text(json.dumps({"two_photon_heating": {"heating.delta_T_K": {"max": 1.0}}}))
    assert _run(tmp_path, "regress", "--expectations", str(expectations)) == EXIT_NUMERICAL


def test_regress_unknown_scenario(tmp_path):
    assert _run(tmp_path, "regress", "--only", "nothing_here") == EXIT_CONFIG


def test_missing_config_is_a_config_error(tmp_path, capsys):
    assert _run(tmp_path, "spin") == EXIT_CONFIG
    assert "❌" in capsys.readouterr().err


def test_missing_scenario_file_is_io(tmp_path):
    assert _run(tmp_path, "--config", str(tmp_path / "absent.toml"), "spin") == EXIT_IO


def test_oversized_step_is_numerical(tmp_path, write_scenario):
    text = open(_scenario_path("swap_transduction"), encoding="utf-8").read()
    text = text.replace("[integrator]\nstride = 5", '[integrator]\nstride = 5\ndt = { value = 1.0, unit = "us" }')
    path = write_scenario(text)
    assert _run(tmp_path, "--config", path, "simulate") == EXIT_NUMERICAL


def test_unknown_direction_is_a_config_error(tmp_path, write_scenario):
    text = open(_scenario_path("swap_transduction"), encoding="utf-8").read()
    path = write_scenario(text.replace('"optical_to_mw"', '"sideways"'))
    assert _run(tmp_path, "--config", path, "simulate") == EXIT_CONFIG


def test_worker_count_precedence(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count(argparse.Namespace(workers=None)) == 3
    assert worker_count(argparse.Namespace(workers=5)) == 5
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count(argparse.Namespace(workers=None)) == (os.cpu_count() or 1)
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        worker_count(argparse.Namespace(workers=None))
    with pytest.raises(InvalidArgumentError):
        worker_count(argparse.Namespace(workers=0))


def test_metric_checks():
    report = {"rows": [{"fidelity": 0.9}], "passed": True, "gamma": None}
    assert lookup(report, "rows.0.fidelity") == 0.9
    assert check_metric(0.9, {"min": 0.85, "max": 0.95})
    assert not check_metric(0.9, {"value": 1.0, "rel": 0.05})
    assert check_metric(True, {"equals": True})
    assert not check_metric(None, {"max": 1.0})
    with pytest.raises(KeyError):
        lookup(report, "rows.0.missing")
