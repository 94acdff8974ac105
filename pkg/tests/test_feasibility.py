import math

import pytest

from models.optics import LaserField, MaterialOptics, SampleGeometry
from utils.constants import ELEMENTARY_CHARGE, HBAR, MHZ_2PI
from utils.dynamics import cavity_suppression_factor
from utils.errors import InvalidArgumentError, SingularityError
from utils.feasibility import (
    PRINTED_EXPONENT,
    absorbed_power_density,
    classify_keldysh,
    dispersive_shift,
    incident_power_density,
    keldysh_parameter,
    linewidth_budget_check,
    rabi_efficiency,
    single_spin_emission_rate,
    temperature_rise,
    two_photon_penetration_depth,
)

EV = ELEMENTARY_CHARGE / HBAR
MV_PER_CM = 1e8
ONE_EV_CAVITY = 1.0 * EV


@pytest.fixture
def material() -> MaterialOptics:
    return MaterialOptics(bandgap_Eg=2.2, two_photon_beta=1e-10, thermal_conductivity_kth=10.0,
                          refractive_index_n=2.0, relative_permittivity_eps_r=5.0)


@pytest.fixture
def pump() -> LaserField:
    return LaserField(amplitude_E=1.0 * MV_PER_CM, angular_frequency=2.0 * EV)


@pytest.fixture
def geometry() -> SampleGeometry:
    return SampleGeometry(depth_d=1e-7)


def test_incident_power(pump):
    assert incident_power_density(pump) == pytest.approx(1.3272094e13, rel=1e-6)


def test_penetration_depth(material, pump):
    assert two_photon_penetration_depth(material, pump) == pytest.approx(7.5346e-4, rel=1e-4)


def test_penetration_depth_without_field(material):
    dark = LaserField(amplitude_E=0.0, angular_frequency=2.0 * EV)
    assert two_photon_penetration_depth(material, dark) == math.inf
    assert keldysh_parameter(material, dark) == math.inf


def test_temperature_rise(material, pump, geometry):
    delta_t = temperature_rise(material, pump, geometry)
    assert delta_t == pytest.approx(17.6149, rel=1e-4)
    assert 12.0 <= delta_t <= 18.0


def test_temperature_rise_scales_with_fourth_power_of_field(material, pump, geometry):
    weak = temperature_rise(material, pump.scaled(0.1), geometry)
    assert weak == pytest.approx(17.6149e-4, rel=1e-4)
    assert weak / temperature_rise(material, pump, geometry) == pytest.approx(1e-4, rel=1e-12)


def test_absorbed_power_linearization(geometry):
    absorbed = absorbed_power_density(1.0, geometry, 1e-3)
    assert absorbed.linearized == pytest.approx(1e-4)
    assert absorbed.exact < absorbed.linearized
    assert absorbed.exact == pytest.approx(1e-4, rel=1e-4)
    with pytest.raises(InvalidArgumentError):
        absorbed_power_density(1.0, geometry, 0.0)


def test_keldysh_parameter(material, pump):
    gamma = keldysh_parameter(material, pump)
    assert gamma == pytest.approx(214.9, rel=1e-3)
    assert classify_keldysh(gamma)


def test_keldysh_printed_exponent_is_tiny(material, pump):
    gamma = keldysh_parameter(material, pump, exponent=PRINTED_EXPONENT)
    assert gamma < 1e-50
    assert not classify_keldysh(gamma)
    with pytest.raises(InvalidArgumentError):
        keldysh_parameter(material, pump, exponent="cube")


def test_keldysh_classification_is_inclusive():
    assert classify_keldysh(1.5)
    assert not classify_keldysh(1.4999)
    assert classify_keldysh(2.0, threshold=2.0)


def test_material_validation():
    with pytest.raises(InvalidArgumentError, match="two_photon_beta"):
        MaterialOptics(2.2, 0.0, 10.0, 2.0, 5.0)
    with pytest.raises(InvalidArgumentError):
        LaserField(-1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        SampleGeometry(0.0)
    with pytest.raises(InvalidArgumentError, match="area"):
        SampleGeometry(1e-7, transverse_area=0.0)
    assert SampleGeometry(1e-7).transverse_area is None


def test_single_spin_emission_rate():
    rate = single_spin_emission_rate(20.0, 0.05, ONE_EV_CAVITY, 5.0, 1e-22, 1e10)
    assert rate == pytest.approx(29.934, rel=1e-3)
    assert 10.0 <= rate <= 300.0
    doubled = single_spin_emission_rate(20.0, 0.1, ONE_EV_CAVITY, 5.0, 1e-22, 1e10)
    assert doubled == pytest.approx(4 * rate)
    with pytest.raises(InvalidArgumentError):
        single_spin_emission_rate(20.0, 0.05, ONE_EV_CAVITY, 5.0, 1e-22, 0.0)


def test_dispersive_shift():
    e_collective = 6.01583e9
    zeta = dispersive_shift(20.0, 1.0, 0.005, e_collective, 0.2 * MHZ_2PI, 1.0 * MHZ_2PI)
    assert zeta / (2 * math.pi) == pytest.approx(30158, rel=1e-3)
    with pytest.raises(SingularityError):
        dispersive_shift(20.0, 1.0, 0.005, e_collective, 0.0, 1.0 * MHZ_2PI)
    with pytest.raises(InvalidArgumentError):
        dispersive_shift(20.0, 1.0, 0.005, e_collective, 0.2 * MHZ_2PI, 0.0)


@pytest.mark.parametrize("detune, kappa1, kappa2, expected", [
    (0.0, 0.0, 0.0, 1.0),
    (1.0, 0.0, 0.0, 0.5),
    (0.0, 1.0, 1.0, 1.0 / 3.0),
])
def test_rabi_efficiency(detune, kappa1, kappa2, expected):
    assert rabi_efficiency(1.0, detune, kappa1, kappa2) == pytest.approx(expected, rel=1e-12)


def test_rabi_efficiency_edges():
    assert rabi_efficiency(0.0, 1.0, 1.0, 1.0) == 0.0
    with pytest.raises(InvalidArgumentError):
        rabi_efficiency(1.0, 0.0, -1.0, 0.0)


def test_linewidth_budget_is_inclusive():
    budget = linewidth_budget_check(1.0, -1.0, 1.0, 1.0)
    assert budget.passed
    assert budget.efficiency == pytest.approx(3.0 / 10.0)
    failed = linewidth_budget_check(1.0, 0.0, 1.01, 0.0)
    assert not failed.passed
    assert failed.detune_ok and not failed.kappa1_ok
    assert failed.to_dict()["kappa1_ok"] is False


def test_cavity_suppression_for_readout():
    factor = cavity_suppression_factor(2 * math.pi * 1e9, 2 * math.pi * 1e6)
    assert factor == pytest.approx(2.5e-7, rel=1e-5)
