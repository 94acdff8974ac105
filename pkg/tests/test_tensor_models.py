import logging
import os

import numpy as np
import pytest

from models.species import EfgTensor
from models.tensors import EfgFieldSeries, ElectronicLevelModel, OnqTensorD
from utils import database
from utils.errors import InvalidArgumentError, SingularityError
from utils.spin_core import quadrupole_prefactor
from utils.tensor_models import (
    BOHR_RADIUS_ANGSTROM,
    c_closed_form,
    c_tensor_perturbation,
    d_closed_form,
    d_tensor_perturbation,
    fit_response_tensors,
    level_model_from_pair,
    mirror_symmetry_report,
)

SERIES_PATH = os.path.join(database.SCENARIO_DIR, "wgan_ga69_series.csv")


def _axis_series(species, values, efg_of_field, axis=0):
    rows = []
    for e in values:
        field = [0.0, 0.0, 0.0]
        field[axis] = e
        rows.append((field, EfgTensor.from_components(efg_of_field(e))))
    return EfgFieldSeries.from_rows(species, rows)


def _quadratic(e):
    xx = -1.0 + 0.2 * e + 3.0 * e ** 2
    yy = 0.5 - 0.2 * e - 1.0 * e ** 2
    return {"xx": xx, "yy": yy, "zz": -(xx + yy), "xy": 0.4 * e, "xz": 0.0, "yz": 0.1 * e ** 2}


@pytest.mark.parametrize("label, e_gap, expected", [
    ("As75", 1.42, 9.16493),
    ("Sb121", 1.12, 6.02822),
    ("Ga69", 1.42, 4.99106),
    ("Cl35", 6.0, 0.564358),
])
def test_c_closed_form_values(label, e_gap, expected):
    assert abs(c_closed_form(database.get_species(label), e_gap)) == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize("label, e_gap, omega, expected", [
    ("Ga69", 3.4, 3.2, 5.51534),
    ("As75", 1.42, 1.22, 24.24938),
    ("Sb121", 1.12, 0.92, 15.95),
])
def test_d_closed_form_values(label, e_gap, omega, expected):
    assert abs(d_closed_form(database.get_species(label), e_gap, omega)) == pytest.approx(expected, rel=1e-3)


def test_closed_form_sign_follows_quadrupole_moment():
    assert c_closed_form(database.get_species("Cl35"), 6.0) < 0
    assert c_closed_form(database.get_species("Ga69"), 6.0) > 0


def test_closed_form_arguments(ga69):
    with pytest.raises(InvalidArgumentError):
        c_closed_form(ga69, 0.0)
    with pytest.raises(InvalidArgumentError):
        d_closed_form(ga69, 1.42, 1.42)
    with pytest.raises(InvalidArgumentError):
        d_closed_form(ga69, 1.42, -0.1)


def test_d_closed_form_diverges_towards_the_gap(ga69):
    far = d_closed_form(ga69, 1.42, 0.0)
    near = d_closed_form(ga69, 1.42, 1.40)
    assert near / far == pytest.approx(1.42 / 0.02)


def test_two_level_perturbation_reduces_to_closed_form(ga69):
    model = level_model_from_pair(1.42, eta=1e-4)
    c = c_tensor_perturbation(model, ga69, 0.0)
    assert c.component("zz", "x") == pytest.approx(c_closed_form(ga69, 1.42, BOHR_RADIUS_ANGSTROM), rel=1e-6)
    assert c.component("zz", "y") == 0.0


def test_perturbation_scales_with_dipole(ga69):
    model = level_model_from_pair(2.0, eta=1e-4)
    c1 = c_tensor_perturbation(model, ga69).c
    c2 = c_tensor_perturbation(model.scaled_dipole(2.0), ga69).c
    np.testing.assert_allclose(c2, 2.0 * c1, rtol=1e-12, atol=1e-15)
    d1 = d_tensor_perturbation(model, ga69, 0.5, 0.3).d
    d2 = d_tensor_perturbation(model.scaled_dipole(2.0), ga69, 0.5, 0.3).d
    np.testing.assert_allclose(d2, 4.0 * d1, rtol=1e-12, atol=1e-15)


def test_d_tensor_symmetries(ga69, rng):
    n = 3
    energies = [0.0, 1.5, 2.4]
    dipole = rng.normal(size=(3, n, n)) + 1j * rng.normal(size=(3, n, n))
    dipole = 0.5 * (dipole + dipole.conj().transpose(0, 2, 1))
    efg = rng.normal(size=(3, 3, n, n))
    efg = 0.5 * (efg + efg.transpose(1, 0, 2, 3))
    efg = 0.5 * (efg + efg.transpose(0, 1, 3, 2))
    model = ElectronicLevelModel(energies, [1.0, 0.0, 0.0], dipole, efg, 1e-3)
    d = d_tensor_perturbation(model, ga69, 0.4, 0.2).d
    np.testing.assert_allclose(d, d.transpose(1, 0, 2, 3), atol=1e-14)
    np.testing.assert_allclose(d, d.transpose(0, 1, 3, 2), atol=1e-14)


def test_exact_resonance_without_linewidth_is_singular(ga69):
    model = level_model_from_pair(1.42, eta=0.0)
    with pytest.raises(SingularityError):
        c_tensor_perturbation(model, ga69, 1.42)


def test_near_resonant_terms_are_skipped_and_logged(ga69, caplog):
    model = level_model_from_pair(1.42, eta=1e-3)
    with caplog.at_level(logging.WARNING, logger="utils.tensor_models"):
        c = c_tensor_perturbation(model, ga69, 1.415)
    assert "near-resonant" in caplog.text
    assert np.all(np.isfinite(c.c))


def test_skip_log_reports_the_model_linewidth(ga69, caplog):
    model = level_model_from_pair(1.42, eta=2e-3)
    with caplog.at_level(logging.WARNING, logger="utils.tensor_models"):
        c_tensor_perturbation(model, ga69, 1.415)
    assert "10 x eta = 2.000e-02 eV" in caplog.text


def test_negative_photon_energy_is_rejected(ga69):
    with pytest.raises(InvalidArgumentError):
        c_tensor_perturbation(level_model_from_pair(1.42), ga69, -0.1)


def test_level_model_validation():
    with pytest.raises(InvalidArgumentError):
        ElectronicLevelModel([0.0, 1.0], [1.0, 2.0], np.zeros((3, 2, 2)), np.zeros((3, 3, 2, 2)))
    dipole = np.zeros((3, 2, 2), dtype=complex)
    dipole[0, 0, 1] = 1.0
    with pytest.raises(InvalidArgumentError, match="Hermitian"):
        ElectronicLevelModel([0.0, 1.0], [1.0, 0.0], dipole, np.zeros((3, 3, 2, 2)))


def test_level_model_round_trip(tmp_path):
    model = level_model_from_pair(1.42)
    path = str(tmp_path / "model.json")
    database.save_level_model(path, model)
    loaded = database.load_level_model(path)
    np.testing.assert_allclose(loaded.dipole, model.dipole)
    np.testing.assert_allclose(loaded.efg_me, model.efg_me)
    assert loaded.linewidth_eta == model.linewidth_eta


@pytest.mark.parametrize("fit_order", [2, 3])
def test_fit_is_exact_on_synthetic_quadratics(ga69, fit_order):
    series = _axis_series(ga69, np.linspace(-0.1, 0.1, 7), _quadratic)
    report = fit_response_tensors(series, fit_order)
    assert report.linear[0, 0, 0] == pytest.approx(0.2, abs=1e-10)
    assert report.linear[0, 1, 0] == pytest.approx(0.4, abs=1e-10)
    assert report.second[0, 0, 0, 0] == pytest.approx(6.0, abs=1e-10)
    assert report.second[1, 2, 0, 0] == pytest.approx(0.2, abs=1e-10)
    assert report.second[2, 2, 0, 0] == pytest.approx(-4.0, abs=1e-10)
    assert max(report.residuals.values()) < 1e-10
    assert report.d.component("xx", "xx") == pytest.approx(6.0 * quadrupole_prefactor(ga69), rel=1e-10)


def test_cubic_fit_recovers_second_derivative_with_cubic_term(ga69):
    def cubic(e):
        xx = 2.0 * e ** 2 + 5.0 * e ** 3
        return {"xx": xx, "yy": -xx, "zz": 0.0, "xy": 0.0, "xz": 0.0, "yz": 0.0}

    series = _axis_series(ga69, np.linspace(-0.2, 0.2, 9), cubic)
    report = fit_response_tensors(series, 3)
    assert report.second[0, 0, 0, 0] == pytest.approx(4.0, abs=1e-10)
    assert report.linear[0, 0, 0] == pytest.approx(0.0, abs=1e-10)


def test_noisy_cubic_fit_matches_normal_equations(ga69, rng):
    sigma = 1e-3
    fields = np.linspace(-0.5, 0.5, 21)
    noise = rng.normal(scale=sigma, size=(len(fields), 3))
    targets = {
        "xx": -1.0 + 0.3 * fields + 2.0 * fields ** 2 + 4.0 * fields ** 3 + noise[:, 0],
        "yy": 0.5 - 0.1 * fields - 1.5 * fields ** 2 + noise[:, 1],
        "xy": 0.7 * fields + 0.25 * fields ** 3 + noise[:, 2],
    }
    rows = []
    for k, e in enumerate(fields):
        xx, yy = targets["xx"][k], targets["yy"][k]
        rows.append(([e, 0.0, 0.0], EfgTensor.from_components(
            {"xx": xx, "yy": yy, "zz": -(xx + yy), "xy": targets["xy"][k]})))
    report = fit_response_tensors(EfgFieldSeries.from_rows(ga69, rows), 3)

    design = np.vander(fields, 4, increasing=True)
    for name, (i, j) in (("xx", (0, 0)), ("yy", (1, 1)), ("xy", (0, 1))):
        oracle = np.linalg.solve(design.T @ design, design.T @ targets[name])
        assert report.linear[i, j, 0] == pytest.approx(oracle[1], rel=1e-8, abs=1e-10)
        assert report.second[i, j, 0, 0] == pytest.approx(2.0 * oracle[2], rel=1e-8, abs=1e-10)
    assert report.linear[0, 0, 0] == pytest.approx(0.3, abs=0.02)
    assert report.second[0, 0, 0, 0] == pytest.approx(4.0, abs=0.05)
    assert report.residuals["xx^x"] > 0.0


def test_plane_rows_give_mixed_derivative(ga69):
    rows = []
    for ex in (-0.1, 0.0, 0.1):
        for ey in (-0.1, 0.0, 0.1):
            xx = 2.0 * ex * ey + ex ** 2
            rows.append(([ex, ey, 0.0], EfgTensor.from_components(
                {"xx": xx, "yy": -2.0 * ex * ey, "zz": -ex ** 2})))
    report = fit_response_tensors(EfgFieldSeries.from_rows(ga69, rows), 2)
    assert report.pairs == ((0, 1),)
    assert report.second[0, 0, 0, 1] == pytest.approx(2.0, abs=1e-10)
    assert report.d.component("xx", "xy") == pytest.approx(2.0 * quadrupole_prefactor(ga69), rel=1e-10)
    assert "xx^xy" in report.to_dict()["D"]


def test_fit_needs_enough_distinct_fields(ga69):
    series = _axis_series(ga69, [-0.1, 0.0, 0.1], _quadratic)
    with pytest.raises(InvalidArgumentError, match="distinct fields"):
        fit_response_tensors(series, 3)
    with pytest.raises(InvalidArgumentError):
        fit_response_tensors(series, 4)


def test_fit_needs_a_field_sweep(ga69):
    series = _axis_series(ga69, [0.0], _quadratic)
    with pytest.raises(InvalidArgumentError, match="no single-axis"):
        fit_response_tensors(series)


def test_wgan_series_fit():
    series = database.load_efg_series(SERIES_PATH)
    report = fit_response_tensors(series, 2).to_dict()
    assert report["axes"] == ["x"]
    assert report["D"]["xx^xx"] == pytest.approx(0.68913, rel=2e-3)
    assert report["C"]["xy^x"] == pytest.approx(0.0344565, rel=2e-3)
    assert report["C"]["xz^x"] == pytest.approx(0.3 * 0.068913, rel=2e-3)
    assert report["C"]["xx^x"] == pytest.approx(0.0, abs=1e-10)


def test_mirror_symmetry_holds_for_wgan_series():
    series = database.load_efg_series(SERIES_PATH)
    report = mirror_symmetry_report(series, "x")
    assert report.consistent
    assert report.forbidden_components == ["xx", "yy", "zz", "yz"]


def test_mirror_violation_is_flagged(ga69, caplog):
    def broken(e):
        xx = -1.0 + 0.5 * e
        return {"xx": xx, "yy": -xx, "zz": 0.0, "xy": 0.0, "xz": 0.0, "yz": 0.0}

    series = _axis_series(ga69, np.linspace(-0.1, 0.1, 5), broken)
    with caplog.at_level(logging.WARNING, logger="utils.tensor_models"):
        report = mirror_symmetry_report(series, "x")
    assert not report.consistent
    flags = {f.component: f for f in report.flags}
    assert not flags["xx"].respects_symmetry
    assert flags["xy"].respects_symmetry
    assert "breaks mirror" in caplog.text


def test_mirror_needs_both_signs(ga69):
    series = _axis_series(ga69, [0.0, 0.05, 0.1], _quadratic)
    with pytest.raises(InvalidArgumentError, match="both"):
        mirror_symmetry_report(series, "x")
    with pytest.raises(InvalidArgumentError):
        mirror_symmetry_report(series, "w")


def test_single_component_d_is_symmetric():
    d = OnqTensorD.single_component(1.5, "xy", "xz")
    assert d.component("xy", "zx") == 1.5
    assert d.d[1, 0, 2, 0] == 1.5
