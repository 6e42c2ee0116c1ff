"""Physical constants and unit conversions.

Internal convention: every energy-like quantity (Hamiltonian matrix
elements, couplings) is an angular frequency in rad/s; incoherent rates
(recombination, dephasing, relaxation) are plain rates in 1/s. All
user-facing I/O uses the conventional units of the problem domain
(GHz, MHz, mT, MV/m, nm, us) and is converted exactly once at the
boundary by the helpers below.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

# electron gyromagnetic ratio g_e*mu_B/hbar, rad/s per tesla
GYRO_E = TWO_PI * 28.024e9

# NV ground-state constants
D_GS = TWO_PI * 2.87e9           # zero-field splitting, rad/s
K_PAR = TWO_PI * 0.0035          # axial electric susceptibility, rad/s per V/m
K_PERP = TWO_PI * 0.17           # transverse electric susceptibility, rad/s per V/m

# electrostatics / magnetostatics (SI)
Q_E = 1.602176634e-19            # elementary charge, C
EPS_0 = 8.8541878128e-12         # vacuum permittivity, F/m
COULOMB_K = 1.0 / (4.0 * np.pi * EPS_0)
MU_0 = 4.0 * np.pi * 1e-7        # vacuum permeability, T m/A
HBAR = 1.054571817e-34           # reduced Planck constant, J s


def mT_to_rad_per_s(value_mT, gyro=GYRO_E):
    """Convert a coupling given in millitesla to an angular frequency."""
    return np.asarray(value_mT) * 1e-3 * gyro


def rad_per_s_to_mT(value, gyro=GYRO_E):
    return np.asarray(value) / (1e-3 * gyro)


def MHz_to_rate(value_MHz):
    """Rates quoted in MHz are plain 1/s rates (no 2*pi)."""
    return np.asarray(value_MHz) * 1e6


def rate_to_MHz(value):
    return np.asarray(value) / 1e6


def us(value):
    """Microseconds to seconds."""
    return np.asarray(value) * 1e-6


def nm(value):
    """Nanometres to metres."""
    return np.asarray(value) * 1e-9
