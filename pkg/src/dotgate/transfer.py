"""Plane-wave transfer/scattering-matrix solution of the 1D Schroedinger problem.

Transmission is computed by composing per-interface scattering matrices
(Redheffer star product), which stays bounded through thick evanescent
barriers where the plain transfer-matrix product overflows.  Quasi-bound
levels are bracketed by a Sturm node count of the closed structure and then
located as maxima of T(E) by golden-section search.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .device import LayerLabel, PotentialMesh
from .search import golden_section_max

TRANSMISSION_SLACK = 1e-6
LOCALIZATION_THRESHOLD = 0.98


class SolverError(RuntimeError):
    pass


def local_wavevector(E: float, V: float, m: float) -> complex:
    """sqrt(2 m (E - V)) / hbar in nm^-1: real for E > V, positive imaginary below."""
    if not m > 0:
        raise ValueError("effective mass must be positive")
    return complex(_kernels.wavevector(float(E), float(V), float(m)))


@dataclass(frozen=True)
class SegmentAmplitudes:
    A: complex
    B: complex
    k: complex


@dataclass(frozen=True)
class ScatteringResult:
    reflection: complex  # B_0 for unit incidence
    transmitted: SegmentAmplitudes  # amplitudes in the gate lead

    @property
    def R(self) -> float:
        return abs(self.reflection) ** 2


def _arrays(mesh: PotentialMesh):
    return mesh.potential, mesh.mass, mesh.widths


def _interior(mesh: PotentialMesh) -> tuple[int, int]:
    """First and last cell after stripping the uniform lead runs at both ends."""
    V, m = mesh.potential, mesh.mass
    n = len(mesh)
    i0 = 1
    while i0 < n - 1 and V[i0] == V[0] and m[i0] == m[0]:
        i0 += 1
    i1 = n - 2
    while i1 > i0 and V[i1] == V[-1] and m[i1] == m[-1]:
        i1 -= 1
    if i1 < i0:
        raise SolverError("mesh has no interior structure between the leads")
    return i0, i1


def propagate(mesh: PotentialMesh, E: float) -> ScatteringResult:
    """Amplitudes in the last segment for A_0 = 1 and B_N = 0."""
    V, m, w = _arrays(mesh)
    r, t, _, _, bad = _kernels.smatrix(V, m, w, float(E))
    if bad >= 0:
        raise SolverError(f"scattering-matrix composition failed at segment {bad} (E={E!r} eV)")
    k_last = _kernels.wavevector(float(E), V[-1], m[-1])
    return ScatteringResult(complex(r), SegmentAmplitudes(complex(t), 0j, complex(k_last)))


def transmission(mesh: PotentialMesh, E) -> float | np.ndarray:
    """Flux transmission T(E); zero when either lead carries no propagating wave."""
    V, m, w = _arrays(mesh)
    arr = np.atleast_1d(np.asarray(E, dtype=float))
    out = _kernels.transmission_many(V, m, w, np.ascontiguousarray(arr))
    return float(out[0]) if np.ndim(E) == 0 else out


@dataclass(frozen=True)
class TransmissionSpectrum:
    energies: np.ndarray
    transmission: np.ndarray


def transmission_spectrum(mesh: PotentialMesh, energies, threads: int = 1) -> TransmissionSpectrum:
    energies = np.asarray(energies, dtype=float)
    if np.any(np.diff(energies) <= 0):
        raise ValueError("energies must be strictly increasing")
    if threads <= 1 or energies.size < 2 * threads:
        T = transmission(mesh, energies)
    else:
        chunks = np.array_split(energies, threads)
        with ThreadPoolExecutor(threads) as pool:
            T = np.concatenate(list(pool.map(lambda c: transmission(mesh, c), chunks)))
    return TransmissionSpectrum(energies, np.atleast_1d(T))


@dataclass(frozen=True, eq=False)
class ResonanceLevel:
    energy: float  # eV
    peak_width: float  # FWHM of the T(E) peak, eV; 0 for a level below a lead band edge
    peak_transmission: float
    density: np.ndarray  # |psi|^2 at cell centers, normalized over the dot window
    f_a: float
    f_b: float

    @property
    def localized(self) -> bool:
        return max(self.f_a, self.f_b) >= LOCALIZATION_THRESHOLD


def _window(mesh: PotentialMesh) -> tuple[int, int]:
    a = mesh.regions.get(LayerLabel.DOT_A.value)
    b = mesh.regions.get(LayerLabel.DOT_B.value)
    if a is not None and b is not None:
        return a[0], b[1]
    return 1, len(mesh) - 1


def wavefunction_density(mesh: PotentialMesh, E: float) -> np.ndarray:
    """|psi|^2 at cell centers for unit incidence from the channel lead (unnormalized)."""
    V, m, w = _arrays(mesh)
    a, b, k = _kernels.amplitudes(V, m, w, float(E))
    half = np.exp(1j * k * 0.5 * w)
    psi = (a + b) * half
    # leads: centers lie a half-width away from the referenced interface
    psi[0] = np.exp(-1j * k[0] * 0.5 * w[0]) + b[0] * np.exp(1j * k[0] * 0.5 * w[0])
    psi[-1] = a[-1] * half[-1]
    return np.abs(psi) ** 2


def _normalize(mesh: PotentialMesh, dens: np.ndarray):
    lo, hi = _window(mesh)
    w = mesh.widths
    norm = float(np.sum(dens[lo:hi] * w[lo:hi]))
    if not norm > 0 or not math.isfinite(norm):
        raise SolverError("wavefunction has no weight in the normalization window")
    dens = dens / norm

    def frac(label):
        reg = mesh.regions.get(label.value)
        if reg is None:
            return 0.0
        return float(min(1.0, np.sum(dens[reg[0]:reg[1]] * w[reg[0]:reg[1]])))

    return dens, frac(LayerLabel.DOT_A), frac(LayerLabel.DOT_B)


def closed_eigenvalues(mesh: PotentialMesh, E_min: float, E_max: float, tol: float = 1e-13):
    """Bound states in [E_min, E_max) of the interior with the end cells extended outward."""
    V, m, w = _arrays(mesh)
    i0, i1 = _interior(mesh)
    top = min(V[i0], V[i1])
    E_hi = min(E_max, top - 1e-12)
    if E_hi <= E_min:
        return []
    E_lo = max(E_min, float(np.min(V[i0:i1 + 1])) - 1e-9)
    c_lo = _kernels.sturm_count(V, m, w, E_lo, i0, i1)
    c_hi = _kernels.sturm_count(V, m, w, E_hi, i0, i1)
    out = []
    for idx in range(c_lo, c_hi):
        lo, hi = E_lo, E_hi
        while hi - lo > tol * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _kernels.sturm_count(V, m, w, mid, i0, i1) > idx:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return out


def _bound_level(mesh: PotentialMesh, E: float) -> ResonanceLevel:
    V, m, w = _arrays(mesh)
    i0, i1 = _interior(mesh)
    reg = mesh.regions.get(LayerLabel.DOT_B.value)
    i_match = reg[1] - 1 if reg else (i0 + i1) // 2
    psi = _kernels.bound_state(V, m, w, float(E), i0, i1, i_match)
    dens, fa, fb = _normalize(mesh, psi**2)
    return ResonanceLevel(float(E), 0.0, 0.0, dens, fa, fb)


def _fwhm(f, x_peak: float, f_peak: float, lo: float, hi: float, step0: float) -> float:
    half = 0.5 * f_peak

    def side(direction, limit):
        step = step0
        x = x_peak
        while True:
            nxt = x + direction * step
            if (direction > 0 and nxt >= limit) or (direction < 0 and nxt <= limit):
                nxt = limit
            if f(nxt) < half:
                return brentq(lambda e: f(e) - half, min(x, nxt), max(x, nxt), xtol=1e-16, rtol=1e-15)
            if nxt == limit:
                return None
            x = nxt
            step *= 4.0

    right = side(+1, hi)
    left = side(-1, lo)
    if right is None or left is None:
        return math.nan
    return right - left


def _refine_peak(mesh, center, lo_limit, hi_limit, refine_tol):
    f = lambda e: transmission(mesh, e)  # noqa: E731
    h = min(1e-7, 0.5 * (hi_limit - lo_limit))
    while True:
        a, b = max(lo_limit, center - h), min(hi_limit, center + h)
        x = golden_section_max(f, a, b, refine_tol)
        edge = min(x - a, b - x) < 2 * refine_tol
        if not edge or (a <= lo_limit and b >= hi_limit):
            return x
        h *= 8.0


def _level_from_peak(mesh, x, lo, hi, refine_tol):
    Tp = transmission(mesh, x)
    width = _fwhm(lambda e: transmission(mesh, e), x, Tp, lo, hi, max(refine_tol, 1e-15))
    dens, fa, fb = _normalize(mesh, wavefunction_density(mesh, x))
    return ResonanceLevel(float(x), float(width), float(Tp), dens, fa, fb)


def find_resonances(mesh: PotentialMesh, E_min: float, E_max: float, scan_step: float = 1e-3,
                    refine_tol: float = 1e-12) -> list[ResonanceLevel]:
    """Transmission maxima in [E_min, E_max], sorted by energy.

    Below the confining end barriers every closed-structure bound state is
    refined to its T(E) maximum; above them T is sampled every ``scan_step``
    and each grid maximum is refined.  A bound state lying below a lead band
    edge has no transmission peak and is reported from the closed-structure
    eigenfunction with zero width.
    """
    if not E_min < E_max:
        raise ValueError("E_min must be below E_max")
    V = mesh.potential
    lead_edge = max(V[0], V[-1])
    eigs = closed_eigenvalues(mesh, E_min, E_max)
    levels = []
    for i, e in enumerate(eigs):
        lo = 0.5 * (eigs[i - 1] + e) if i > 0 else max(E_min, e - 0.5 * abs(e) - 1e-3)
        hi = 0.5 * (eigs[i + 1] + e) if i + 1 < len(eigs) else e + (e - lo)
        if e <= lead_edge:
            levels.append(_bound_level(mesh, e))
            continue
        lo = max(lo, lead_edge)
        try:
            x = _refine_peak(mesh, e, lo, hi, refine_tol)
        except Exception as exc:  # noqa: BLE001
            raise SolverError(f"peak refinement failed in [{lo!r}, {hi!r}] eV: {exc}") from exc
        levels.append(_level_from_peak(mesh, x, lo, hi, refine_tol))

    i0, i1 = _interior(mesh)
    top = min(V[i0], V[i1])
    if E_max > top:
        start = max(E_min, top)
        grid = np.arange(start, E_max + 0.5 * scan_step, scan_step)
        T = transmission(mesh, grid)
        for i in range(1, grid.size - 1):
            if T[i] > T[i - 1] and T[i] >= T[i + 1] and T[i] > 0:
                x = golden_section_max(lambda e: transmission(mesh, e), grid[i - 1], grid[i + 1], refine_tol)
                if any(abs(x - lv.energy) < scan_step for lv in levels):
                    continue
                levels.append(_level_from_peak(mesh, x, grid[i - 1], grid[i + 1], refine_tol))
    levels.sort(key=lambda lv: lv.energy)
    return levels


def lowest_levels(mesh: PotentialMesh, count: int = 2, refine_tol: float = 1e-12) -> list[ResonanceLevel]:
    """The ``count`` lowest quasi-bound levels of the dot structure."""
    V = mesh.potential
    i0, i1 = _interior(mesh)
    E_min = float(np.min(V[i0:i1 + 1])) - 1e-9
    E_top = float(min(V[i0], V[i1]))
    eigs = closed_eigenvalues(mesh, E_min, E_top)
    if len(eigs) < count:
        raise SolverError(f"found {len(eigs)} bound levels, need {count}")
    # window reaching just past the requested levels keeps refinement brackets local
    upper = eigs[count] if len(eigs) > count else E_top
    E_max = 0.5 * (eigs[count - 1] + upper)
    return find_resonances(mesh, E_min, E_max, refine_tol=refine_tol)[:count]


def level_splitting(levels) -> float:
    """Energy gap between the two lowest levels."""
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    e = sorted(lv.energy if hasattr(lv, "energy") else float(lv) for lv in levels)
    return e[1] - e[0]
