import math
import warnings
from dataclasses import replace

import pytest
import scipy.constants as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from dotgate.environment import (BATH_PRESETS, BathParameters, DecoherenceReport, crossover_frequency,
                                 decoherence_report, delta_from_energy, ohmic_alpha, ohmic_spectral,
                                 renormalization_exponent, renormalized_tunneling, spectral_function,
                                 superohmic_damping_rate, superohmic_spectral)

SIO2 = BATH_PRESETS["a-SiO2"]
DELTA = delta_from_energy(1e-5)  # s^-1


# the same formulas in eV / nm / ps, converted only at the boundary
EV = sc.e
HBAR_EV_PS = sc.hbar / EV * 1e12
RHO_EV = SIO2.mass_density / EV * 1e-21  # eV ps^2 / nm^5
C_NM_PS = SIO2.sound_velocity * 1e-3
D_NM = SIO2.lattice_constant * 1e9
GAMMA = SIO2.deformation_potential


def test_delta_conversion():
    assert DELTA == pytest.approx(1.519267e10, rel=1e-6)
    assert DELTA * 1e-12 == pytest.approx(1e-5 / HBAR_EV_PS, rel=1e-12)


def test_damping_time_reference_value():
    tau = 1.0 / superohmic_damping_rate(DELTA, SIO2)
    assert tau == pytest.approx(4.7613e-7, rel=1e-4)
    assert abs(tau / 4.8e-7 - 1.0) < 0.10


def test_damping_rate_in_second_unit_system():
    d_ps = DELTA * 1e-12
    rate_ps = GAMMA**2 * d_ps**3 / (4.0 * math.pi * HBAR_EV_PS * RHO_EV * C_NM_PS**5)
    assert superohmic_damping_rate(DELTA, SIO2) == pytest.approx(rate_ps * 1e12, rel=1e-10)


def test_alpha_and_exponent_in_second_unit_system():
    alpha = GAMMA**2 * SIO2.coupling_ratio**2 / (2 * math.pi**2 * HBAR_EV_PS * RHO_EV * C_NM_PS**3 * D_NM**2)
    assert ohmic_alpha(SIO2) == pytest.approx(alpha, rel=1e-10)
    wc_ps = sc.k * SIO2.debye_temperature / sc.hbar * 1e-12
    x = GAMMA**2 * wc_ps**2 / (2 * math.pi**2 * HBAR_EV_PS * RHO_EV * C_NM_PS**5)
    assert renormalization_exponent(SIO2) == pytest.approx(x, rel=1e-10)


def test_spectral_function_in_second_unit_system():
    w = 3e11
    w_ps = w * 1e-12
    cubic = GAMMA**2 * w_ps**3 / (2 * math.pi**2 * HBAR_EV_PS * RHO_EV * C_NM_PS**5)
    linear = ohmic_alpha(SIO2) * w_ps
    assert spectral_function(w, SIO2) == pytest.approx((cubic + linear) * 1e12, rel=1e-10)


def test_bath_reference_numbers():
    assert ohmic_alpha(SIO2) == pytest.approx(2.82e-7, rel=1e-3)
    assert 1e-7 <= ohmic_alpha(SIO2) <= 4e-7
    assert renormalization_exponent(SIO2) == pytest.approx(1323.39, rel=1e-5)
    # exp(-1323) underflows a double
    assert renormalization_exponent(SIO2) > 1e3
    assert renormalized_tunneling(DELTA, SIO2) == 0.0
    # nu c / d
    assert crossover_frequency(SIO2) == pytest.approx(8.6e8, rel=1e-12)


def test_crossover_balances_the_two_terms():
    w = crossover_frequency(SIO2)
    assert superohmic_spectral(w, SIO2) == pytest.approx(ohmic_spectral(w, SIO2), rel=1e-12)
    assert superohmic_spectral(10 * w, SIO2) > ohmic_spectral(10 * w, SIO2)


def test_trivial_limits():
    assert spectral_function(0.0, SIO2) == 0.0
    assert superohmic_damping_rate(0.0, SIO2) == 0.0
    uncoupled = replace(SIO2, deformation_potential=0.0)
    assert renormalized_tunneling(DELTA, uncoupled) == DELTA
    assert ohmic_alpha(replace(SIO2, coupling_ratio=0.0)) == 0.0
    with pytest.raises(ValueError):
        spectral_function(-1.0, SIO2)
    with pytest.raises(ValueError):
        renormalized_tunneling(0.0, SIO2)


def test_scaling_laws():
    w = 1e13
    no_ohmic = replace(SIO2, coupling_ratio=0.0)
    assert spectral_function(2 * w, no_ohmic) / spectral_function(w, no_ohmic) == pytest.approx(8.0)
    assert superohmic_damping_rate(2 * DELTA, SIO2) / superohmic_damping_rate(DELTA, SIO2) == pytest.approx(8.0)
    assert ohmic_alpha(replace(SIO2, coupling_ratio=2e-4)) / ohmic_alpha(SIO2) == pytest.approx(4.0)
    x = renormalization_exponent(SIO2)
    assert renormalization_exponent(SIO2, 2 * SIO2.cutoff_frequency) == pytest.approx(4 * x)


def test_bath_validation():
    with pytest.raises(ValueError):
        replace(SIO2, sound_velocity=0.0)
    with pytest.raises(ValueError):
        replace(SIO2, deformation_potential=-1.0)
    with pytest.warns(UserWarning):
        replace(SIO2, coupling_ratio=0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        BathParameters(10.0, 4300.0, 2200.0, 0.5e-9, 1e-4, 450.0)


def test_report():
    rep = decoherence_report(DELTA, SIO2, 5.2e-12)
    assert rep.ops_per_coherence == pytest.approx(9.156e4, rel=1e-3)
    assert rep.ops_per_coherence >= 1e3
    assert rep.regime == "coherent_underdamped"
    assert rep.temperature == 0.0
    assert rep.delta_tilde <= rep.delta_bare
    assert rep.gamma_so_renormalized <= rep.gamma_so_bare
    assert rep.tau_so_bare == 1.0 / rep.gamma_so_bare
    assert rep.ops_per_coherence == rep.tau_so_bare / rep.gate_time
    assert rep.tau_so_renormalized == math.inf
    assert rep.log10_delta_tilde == pytest.approx(math.log10(DELTA * 1e-12) - rep.renormalization_exponent / math.log(10), rel=1e-12)
    assert DecoherenceReport.from_dict(rep.to_dict()) == rep
    same = decoherence_report(DELTA, SIO2, rep.tau_so_bare)
    assert same.ops_per_coherence == pytest.approx(1.0)
    with pytest.raises(ValueError):
        decoherence_report(DELTA, SIO2, 0.0)


@settings(max_examples=100, deadline=None)
@given(hd=st.floats(1e-8, 1e-2), theta=st.floats(10.0, 600.0), nu=st.floats(0.0, 0.05))
def test_report_invariants(hd, theta, nu):
    bath = replace(SIO2, debye_temperature=theta, coupling_ratio=nu)
    rep = decoherence_report(delta_from_energy(hd), bath, 1e-12)
    assert rep.delta_tilde <= rep.delta_bare
    assert rep.gamma_so_renormalized <= rep.gamma_so_bare
    assert rep.ops_per_coherence == rep.tau_so_bare / rep.gate_time
