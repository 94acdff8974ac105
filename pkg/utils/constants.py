"""
Physical constants for ONQ Lab.
Fixed CODATA-2018 values in SI units, plus the unit factors used throughout the package.
"""

import math

# CODATA 2018
ELEMENTARY_CHARGE = 1.602176634e-19      # C
HBAR = 1.054571817e-34                   # J s
PLANCK = 6.62607015e-34                  # J s
EPSILON_0 = 8.8541878128e-12             # F/m
MU_0 = 1.25663706212e-6                  # N/A^2
SPEED_OF_LIGHT = 299792458.0             # m/s
ELECTRON_MASS = 9.1093837015e-31         # kg
BOHR_RADIUS = 5.29177210903e-11          # m

# Unit factors
ANGSTROM = 1e-10                         # m
BARN = 1e-28                             # m^2
TWO_PI = 2.0 * math.pi
MHZ_2PI = TWO_PI * 1e6                   # rad/s per "2pi MHz"
EV_TO_JOULE = ELEMENTARY_CHARGE
EV_TO_RAD_PER_S = ELEMENTARY_CHARGE / HBAR
EV_TO_HZ = ELEMENTARY_CHARGE / PLANCK    # 2.417989e14

# Field conversions: 1 V/A = 1e10 V/m, 1 V/A^2 = 1e20 V/m^2
V_PER_ANGSTROM = 1.0 / ANGSTROM
V_PER_ANGSTROM2 = 1.0 / ANGSTROM ** 2

# Electron spin degeneracy used by the closed-form tensor estimates
SPIN_DEGENERACY = 2

CODATA_2018 = {
    "elementary charge": ELEMENTARY_CHARGE,
    "reduced Planck constant": HBAR,
    "Planck constant": PLANCK,
    "vacuum electric permittivity": EPSILON_0,
    "vacuum mag. permeability": MU_0,
    "speed of light in vacuum": SPEED_OF_LIGHT,
    "electron mass": ELECTRON_MASS,
    "Bohr radius": BOHR_RADIUS,
}
