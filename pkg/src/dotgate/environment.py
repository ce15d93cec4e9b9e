"""Acoustic-phonon (spin-boson) decoherence estimates at T = 0.

All quantities are SI: frequencies in s^-1, times in s.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from .constants import E_CHARGE, HBAR_SI, K_B_SI


@dataclass(frozen=True)
class BathParameters:
    deformation_potential: float  # eV
    sound_velocity: float  # m/s
    mass_density: float  # kg/m^3
    lattice_constant: float  # m
    coupling_ratio: float  # nu, dimensionless
    debye_temperature: float  # K

    def __post_init__(self):
        # zero coupling is allowed so the uncoupled limits stay expressible
        for name in ("deformation_potential", "coupling_ratio"):
            if getattr(self, name) < 0:
                raise ValueError(f"bath parameter {name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("sound_velocity", "mass_density", "lattice_constant", "debye_temperature"):
            if not getattr(self, name) > 0:
                raise ValueError(f"bath parameter {name} must be > 0, got {getattr(self, name)!r}")
        if self.coupling_ratio > 0.1:
            warnings.warn(f"coupling ratio nu = {self.coupling_ratio} is not small", stacklevel=2)

    @property
    def gamma_si(self) -> float:
        return self.deformation_potential * E_CHARGE

    @property
    def cutoff_frequency(self) -> float:
        """omega_c = k_B Theta_D / hbar."""
        return K_B_SI * self.debye_temperature / HBAR_SI

    @property
    def superohmic_prefactor(self) -> float:
        """gamma^2 / (2 pi^2 hbar rho c^5), s^2."""
        return self.gamma_si**2 / (2.0 * math.pi**2 * HBAR_SI * self.mass_density * self.sound_velocity**5)


BATH_PRESETS = {
    "a-SiO2": BathParameters(
        deformation_potential=10.0,
        sound_velocity=4300.0,
        mass_density=2200.0,
        lattice_constant=0.5e-9,
        coupling_ratio=1e-4,
        debye_temperature=450.0,
    ),
}


def _check_frequency(w: float):
    if w < 0:
        raise ValueError(f"frequency must be non-negative, got {w!r}")


def superohmic_spectral(omega: float, bath: BathParameters) -> float:
    _check_frequency(omega)
    return bath.superohmic_prefactor * omega**3


def ohmic_spectral(omega: float, bath: BathParameters) -> float:
    _check_frequency(omega)
    return ohmic_alpha(bath) * omega


def spectral_function(omega: float, bath: BathParameters) -> float:
    """J(omega) / (2 pi hbar) in s^-1: cubic (superohmic) plus linear (ohmic) part."""
    return superohmic_spectral(omega, bath) + ohmic_spectral(omega, bath)


def crossover_frequency(bath: BathParameters) -> float:
    """Frequency where the cubic and linear parts of the spectral function are equal."""
    return bath.coupling_ratio * bath.sound_velocity / bath.lattice_constant


def ohmic_alpha(bath: BathParameters) -> float:
    """Dimensionless ohmic coefficient gamma^2 nu^2 / (2 pi^2 hbar rho c^3 d^2)."""
    return (bath.gamma_si**2 * bath.coupling_ratio**2
            / (2.0 * math.pi**2 * HBAR_SI * bath.mass_density * bath.sound_velocity**3
               * bath.lattice_constant**2))


def renormalization_exponent(bath: BathParameters, omega_c: float | None = None) -> float:
    """Magnitude of the (negative) exponent suppressing the tunneling frequency."""
    wc = bath.cutoff_frequency if omega_c is None else omega_c
    return bath.superohmic_prefactor * wc**2


def renormalized_tunneling(delta: float, bath: BathParameters, omega_c: float | None = None) -> float:
    if not delta > 0:
        raise ValueError("tunneling frequency must be > 0")
    if omega_c is not None and not omega_c > 0:
        raise ValueError("cutoff frequency must be > 0")
    return delta * math.exp(-renormalization_exponent(bath, omega_c))


def superohmic_damping_rate(delta_eff: float, bath: BathParameters) -> float:
    """T = 0 damping rate gamma^2 Delta^3 / (4 pi hbar rho c^5), s^-1."""
    _check_frequency(delta_eff)
    return (bath.gamma_si**2 * delta_eff**3
            / (4.0 * math.pi * HBAR_SI * bath.mass_density * bath.sound_velocity**5))


def _inverse(rate: float) -> float:
    return 1.0 / rate if rate > 0 else math.inf


@dataclass(frozen=True)
class DecoherenceReport:
    """Budget at T = 0.  Tunneling frequencies in ps^-1, rates in s^-1, times in s.

    The renormalized frequency usually underflows to 0, so its base-10
    logarithm is carried alongside.
    """

    delta_bare: float
    delta_tilde: float
    log10_delta_tilde: float
    renormalization_exponent: float
    gamma_so_bare: float
    gamma_so_renormalized: float
    tau_so_bare: float
    tau_so_renormalized: float
    alpha_ohmic: float
    regime: str
    gate_time: float
    ops_per_coherence: float
    temperature: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DecoherenceReport":
        return cls(**d)


def decoherence_report(delta: float, bath: BathParameters, gate_time: float) -> DecoherenceReport:
    """``delta`` in s^-1 and ``gate_time`` in s."""
    if not delta > 0 or not gate_time > 0:
        raise ValueError("delta and gate_time must be > 0")
    x = renormalization_exponent(bath)
    d_tilde = renormalized_tunneling(delta, bath)
    g_bare = superohmic_damping_rate(delta, bath)
    g_ren = superohmic_damping_rate(d_tilde, bath)
    alpha = ohmic_alpha(bath)
    tau_bare = _inverse(g_bare)
    return DecoherenceReport(
        delta_bare=delta * 1e-12,
        delta_tilde=d_tilde * 1e-12,
        log10_delta_tilde=math.log10(delta * 1e-12) - x / math.log(10.0),
        renormalization_exponent=x,
        gamma_so_bare=g_bare,
        gamma_so_renormalized=g_ren,
        tau_so_bare=tau_bare,
        tau_so_renormalized=_inverse(g_ren),
        alpha_ohmic=alpha,
        regime="coherent_underdamped" if alpha < 0.5 else "incoherent",
        gate_time=gate_time,
        ops_per_coherence=tau_bare / gate_time,
    )


def delta_from_energy(hbar_delta_ev: float) -> float:
    """Tunneling frequency (s^-1) for a tunneling energy hbar*Delta in eV."""
    return hbar_delta_ev * E_CHARGE / HBAR_SI
