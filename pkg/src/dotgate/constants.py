"""Physical constants (CODATA 2018 via scipy) and the internal eV/nm/ps unit system."""

from scipy import constants as _c

E_CHARGE = _c.e  # C
HBAR_SI = _c.hbar  # J s
M0_SI = _c.m_e  # kg
EPS0_SI = _c.epsilon_0  # F/m
K_B_SI = _c.k  # J/K

# internal units: energy eV, length nm, time ps, mass m0
HBAR = _c.hbar / _c.e * 1e12  # eV ps
HBAR2_2M0 = _c.hbar**2 / (2.0 * _c.m_e) / _c.e * 1e18  # eV nm^2
COULOMB_K = _c.e / (4.0 * _c.pi * _c.epsilon_0) * 1e9  # e^2/(4 pi eps0) in eV nm
