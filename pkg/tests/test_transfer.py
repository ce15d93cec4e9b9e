import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import STACK
from dotgate.constants import COULOMB_K
from dotgate.device import CONTROL_ONE, PotentialMesh, build_potential
from dotgate.transfer import (SolverError, closed_eigenvalues, find_resonances, level_splitting, local_wavevector,
                              lowest_levels, propagate, transmission, transmission_spectrum)
from oracles import H2M, barrier_transmission, fd_levels

ENERGIES = np.linspace(0.01, 3.0, 1000)


def barrier(width, m_lead=0.2, m_bar=0.2, v0=3.1, cells=1):
    return PotentialMesh.from_segments([1.0, width, 1.0], [0.0, v0, 0.0], [m_lead, m_bar, m_lead],
                                       cells=[1, cells, 1])


@pytest.mark.parametrize("width", [1.0, 1.5, 2.0, 2.5, 3.0])
def test_rectangular_barrier_matches_closed_form(width):
    T = transmission(barrier(width), ENERGIES)
    ref = np.array([barrier_transmission(e, 3.1, width, 0.2, 0.2) for e in ENERGIES])
    assert np.max(np.abs(T / ref - 1.0)) < 1e-8


def test_barrier_with_mass_mismatch_and_above_top():
    mesh = barrier(2.0, m_lead=0.5, m_bar=0.2)
    E = np.concatenate([ENERGIES, np.linspace(3.15, 6.0, 200)])
    ref = np.array([barrier_transmission(e, 3.1, 2.0, 0.5, 0.2) for e in E])
    assert np.max(np.abs(transmission(mesh, E) / ref - 1.0)) < 1e-8


def test_subdividing_a_segment_changes_nothing():
    E = np.linspace(0.05, 2.9, 50)
    assert np.allclose(transmission(barrier(2.0, cells=37), E), transmission(barrier(2.0), E), rtol=1e-10)


def test_no_transmission_below_a_lead_edge():
    mesh = PotentialMesh.from_segments([1.0, 1.0, 1.0], [0.0, 1.0, 0.5], 0.2)
    assert transmission(mesh, 0.3) == 0.0
    assert transmission(mesh, 0.6) > 0.0


def test_local_wavevector():
    assert local_wavevector(1.0, 0.0, 0.2) == pytest.approx(math.sqrt(0.2 / H2M))
    k = local_wavevector(0.0, 1.0, 0.2)
    assert k.real == 0.0 and k.imag == pytest.approx(math.sqrt(0.2 / H2M))
    with pytest.raises(ValueError):
        local_wavevector(1.0, 0.0, 0.0)


def test_energy_exactly_at_a_band_edge():
    mesh = PotentialMesh.from_segments([1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 1.0, 0.0], [1.0, 0.5, 1.0, 1.0])
    assert transmission(mesh, 1.0) == pytest.approx(transmission(mesh, 1.0 + 1e-9), rel=1e-6)
    assert transmission(mesh.mirrored(), 1.0) == pytest.approx(transmission(mesh, 1.0), rel=1e-8)


def test_scalar_and_array_inputs_agree(geometry):
    mesh = build_potential(geometry, 0.1, CONTROL_ONE, 500)
    E = np.array([0.2, 0.5, 1.0])
    assert transmission(mesh, E)[1] == transmission(mesh, 0.5)
    assert isinstance(transmission(mesh, 0.5), float)


def test_spectrum_threads_match_serial(geometry):
    mesh = build_potential(geometry, 0.1, CONTROL_ONE, 500)
    E = np.linspace(0.01, 0.5, 401)
    a = transmission_spectrum(mesh, E, threads=1)
    b = transmission_spectrum(mesh, E, threads=4)
    assert np.array_equal(a.transmission, b.transmission)
    with pytest.raises(ValueError):
        transmission_spectrum(mesh, E[::-1])


layer_widths = st.lists(st.floats(0.2, 3.0), min_size=1, max_size=6)
layer_pots = st.floats(-0.3, 3.5)
layer_mass = st.floats(0.05, 1.0)


@st.composite
def random_meshes(draw):
    widths = draw(layer_widths)
    n = len(widths)
    pots = draw(st.lists(layer_pots, min_size=n, max_size=n))
    masses = draw(st.lists(layer_mass, min_size=n, max_size=n))
    lead = draw(st.tuples(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2)))
    m_lead = draw(st.tuples(layer_mass, layer_mass))
    return PotentialMesh.from_segments([1.0, *widths, 1.0], [lead[0], *pots, lead[1]],
                                       [m_lead[0], *masses, m_lead[1]])


@settings(max_examples=150, deadline=None)
@given(mesh=random_meshes(), E=st.floats(0.21, 4.0))
def test_flux_conservation(mesh, E):
    T = transmission(mesh, E)
    R = propagate(mesh, E).R
    assert 0.0 <= T <= 1.0 + 1e-12
    assert T + R == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=150, deadline=None)
@given(mesh=random_meshes(), E=st.floats(0.21, 4.0))
def test_reciprocity(mesh, E):
    assert transmission(mesh.mirrored(), E) == pytest.approx(transmission(mesh, E), rel=1e-8, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(width=st.floats(0.5, 3.0), E=st.floats(0.01, 3.0), cells=st.integers(1, 50))
def test_uniform_subdivision_is_invisible(width, E, cells):
    assert transmission(barrier(width, cells=cells), E) == pytest.approx(
        barrier_transmission(E, 3.1, width, 0.2, 0.2), rel=1e-8)


def test_symmetric_double_barrier_peaks_reach_unity():
    mesh = PotentialMesh.from_segments([2.0, 1.5, 5.0, 1.5, 2.0], [0.0, 1.0, 0.0, 1.0, 0.0], 0.2,
                                       cells=[1, 20, 60, 20, 1])
    levels = find_resonances(mesh, 0.005, 0.9)
    assert len(levels) >= 2
    for lv in levels:
        assert lv.peak_transmission == pytest.approx(1.0, abs=1e-6)
        assert lv.peak_width > 0
    eigs = closed_eigenvalues(mesh, 0.0, 0.9)
    # leakage shifts the open-system peaks slightly off the closed-structure levels
    assert [lv.energy for lv in levels[:len(eigs)]] == pytest.approx(eigs, rel=0.01)


def test_above_barrier_resonances():
    # T = 1 where the barrier holds a whole number of half wavelengths
    v0, w, m = 0.3, 5.0, 0.2
    mesh = PotentialMesh.from_segments([1.0, w, 1.0], [0.0, v0, 0.0], m)
    expected = [v0 + H2M / m * (n * math.pi / w) ** 2 for n in (1, 2, 3, 4)]
    levels = find_resonances(mesh, 0.31, 1.6, scan_step=1e-3)
    got = [lv.energy for lv in levels]
    assert got == pytest.approx(expected, rel=1e-6)
    assert all(lv.peak_transmission == pytest.approx(1.0, abs=1e-9) for lv in levels)


def test_find_resonances_rejects_empty_window(geometry):
    with pytest.raises(ValueError):
        find_resonances(build_potential(geometry, 0.0, CONTROL_ONE, 300), 0.5, 0.5)


def test_level_splitting():
    assert level_splitting([0.3, 0.1, 0.2]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        level_splitting([0.1])


def test_mesh_without_structure():
    mesh = PotentialMesh.from_segments([1.0, 1.0, 1.0], 0.0, 0.2)
    with pytest.raises(SolverError):
        lowest_levels(mesh)


# dense finite-difference eigenvalues, h = 2 pm, hard walls at the contacts
FD_REFERENCE = {
    0.10: (0.03609253, 0.05277579),
    0.1547051730677591: (0.02140493, 0.02147023),
    0.21: (-0.01027145, 0.0064845),
}


def _shifts(geometry):
    r = geometry.neighbor_distances
    return {"dot_a": COULOMB_K / (4.0 * r[("a", "a")]), "dot_b": COULOMB_K / (4.0 * r[("b", "a")])}


@pytest.mark.parametrize("bias", sorted(FD_REFERENCE))
def test_levels_match_finite_difference(geometry, bias):
    oracle = fd_levels(STACK, bias, _shifts(geometry), 0.2, h=0.002)
    assert oracle == pytest.approx(FD_REFERENCE[bias], abs=1e-8)
    levels = lowest_levels(build_potential(geometry, bias, CONTROL_ONE, 1000))
    for lv, ref in zip(levels, oracle):
        assert abs(lv.energy - ref) <= max(1e-4, 0.01 * abs(ref))


def test_localization_fractions(geometry):
    deep_a = lowest_levels(build_potential(geometry, 0.10, CONTROL_ONE, 1000))
    assert deep_a[0].f_a > 0.98 and deep_a[1].f_b > 0.98
    deep_b = lowest_levels(build_potential(geometry, 0.21, CONTROL_ONE, 1000))
    assert deep_b[0].f_b > 0.98 and deep_b[0].localized
    assert deep_b[0].peak_width == 0.0  # below the gate-lead band edge
    for lv in deep_a + deep_b:
        assert lv.f_a + lv.f_b <= 1.0 + 1e-12
        assert np.all(lv.density >= 0)
