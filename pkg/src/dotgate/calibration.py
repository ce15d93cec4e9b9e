"""Gate-bias calibration of the target qubit.

Maps the two lowest levels over gate bias, finds the delocalization
(hatched) window where the target electron tunnels between its dots, and
the resonant bias at the avoided crossing.  One calibration per control
state gives the operating point of the controlled-NOT pulse.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import HBAR
from .device import CONTROL_ONE, CONTROL_ZERO, NeighborOccupancy, QubitGeometry, build_potential
from .search import golden_section_min
from .transfer import LOCALIZATION_THRESHOLD, ResonanceLevel, SolverError, lowest_levels


class CalibrationError(RuntimeError):
    pass


def levels_at(geometry: QubitGeometry, occupancy: NeighborOccupancy, bias: float, n_mesh: int = 1000,
              refine_tol: float = 1e-12) -> list[ResonanceLevel]:
    mesh = build_potential(geometry, bias, occupancy, n_mesh)
    try:
        return lowest_levels(mesh, 2, refine_tol)
    except SolverError as exc:
        raise SolverError(f"at gate bias {bias!r} V: {exc}") from exc


@dataclass(frozen=True, eq=False)
class BiasScan:
    bias: np.ndarray
    levels: tuple[tuple[ResonanceLevel, ...], ...]
    occupancy: NeighborOccupancy

    def rows(self):
        """(bias_V, E0_eV, E1_eV, f_a, f_b) with f of the ground level."""
        for v, lv in zip(self.bias, self.levels):
            yield float(v), lv[0].energy, lv[1].energy, lv[0].f_a, lv[0].f_b

    @property
    def splitting(self) -> np.ndarray:
        return np.array([lv[1].energy - lv[0].energy for lv in self.levels])

    @property
    def ground_fa(self) -> np.ndarray:
        return np.array([lv[0].f_a for lv in self.levels])

    @property
    def ground_fb(self) -> np.ndarray:
        return np.array([lv[0].f_b for lv in self.levels])

    def merged(self, other: "BiasScan") -> "BiasScan":
        # grids built from different origins disagree in the last bits
        pts = {round(float(v), 12): lv for v, lv in zip(self.bias, self.levels)}
        pts.update({round(float(v), 12): lv for v, lv in zip(other.bias, other.levels)})
        keys = sorted(pts)
        return BiasScan(np.array(keys), tuple(pts[k] for k in keys), self.occupancy)


def bias_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("bias step must be positive")
    if not hi > lo:
        raise ValueError(f"empty bias range [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def scan_bias(geometry: QubitGeometry, occupancy: NeighborOccupancy, bias_range: tuple[float, float],
              bias_step: float, n_mesh: int = 1000, refine_tol: float = 1e-12, threads: int = 1) -> BiasScan:
    bias = bias_grid(bias_range[0], bias_range[1], bias_step)

    def one(v):
        return tuple(levels_at(geometry, occupancy, float(v), n_mesh, refine_tol))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            levels = tuple(pool.map(one, bias))
    else:
        levels = tuple(one(v) for v in bias)
    return BiasScan(bias, levels, occupancy)


@dataclass(frozen=True)
class CalibrationResult:
    occupancy: NeighborOccupancy
    v_res: float  # minimum of the level splitting, V
    v_equal: float  # ground level equally shared by both dots, V
    delta_e_at_res: float  # eV
    level_energies: tuple[float, float]  # the two lowest levels at v_res, eV
    ground_fa: float
    ground_fb: float
    region_a: tuple[float, float]
    hatched: tuple[float, float]
    region_b: tuple[float, float]

    @property
    def window_width(self) -> float:
        return self.hatched[1] - self.hatched[0]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["occupancy"] = [self.occupancy.rho_a2, self.occupancy.rho_b2]
        for k in ("level_energies", "region_a", "hatched", "region_b"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        d = dict(d)
        d["occupancy"] = NeighborOccupancy(*d["occupancy"])
        for k in ("level_energies", "region_a", "hatched", "region_b"):
            d[k] = tuple(d[k])
        return cls(**d)


class _Probe:
    """Memoized ground/excited level data of one (geometry, occupancy) over bias."""

    def __init__(self, geometry, occupancy, n_mesh, refine_tol):
        self.args = (geometry, occupancy)
        self.n_mesh = n_mesh
        self.refine_tol = refine_tol
        self.cache: dict[float, list[ResonanceLevel]] = {}

    def __call__(self, v: float) -> list[ResonanceLevel]:
        v = float(v)
        if v not in self.cache:
            self.cache[v] = levels_at(*self.args, v, self.n_mesh, self.refine_tol)
        return self.cache[v]

    def splitting(self, v):
        lv = self(v)
        return lv[1].energy - lv[0].energy

    def imbalance(self, v):
        lv = self(v)[0]
        return lv.f_a - lv.f_b

    def localization_margin(self, v):
        lv = self(v)[0]
        return max(lv.f_a, lv.f_b) - LOCALIZATION_THRESHOLD


def _boundary(probe: _Probe, inside: float, limit: float, step: float) -> float:
    """Bias where the ground level becomes localized again, walking from ``inside`` toward ``limit``."""
    direction = 1.0 if limit > inside else -1.0
    x = inside
    while True:
        nxt = x + direction * step
        if direction * (nxt - limit) >= 0:
            nxt = limit
        if probe.localization_margin(nxt) >= 0:
            a, b = sorted((x, nxt))
            return brentq(probe.localization_margin, a, b, xtol=1e-9)
        if nxt == limit:
            raise CalibrationError(f"delocalization window extends past the bracket edge {limit!r} V")
        x = nxt


def find_resonant_bias(geometry: QubitGeometry, occupancy: NeighborOccupancy, bracket: tuple[float, float],
                       tol: float = 1e-7, coarse_step: float = 1e-3, n_mesh: int = 1000,
                       refine_tol: float = 1e-12) -> CalibrationResult:
    """Resonant gate bias V_res for one neighbor occupancy.

    A coarse scan verifies the ground level moves from dot a to dot b
    exactly once inside ``bracket``; the splitting minimum is then located by
    golden-section search to ``tol``.
    """
    lo, hi = bracket
    probe = _Probe(geometry, occupancy, n_mesh, refine_tol)
    grid = bias_grid(lo, hi, coarse_step)
    if grid[-1] < hi - 1e-12:
        grid = np.append(grid, hi)
    sign = np.sign([probe.imbalance(v) for v in grid])
    flips = [i for i in range(grid.size - 1) if sign[i] != sign[i + 1]]
    if not flips:
        raise CalibrationError(f"no delocalization window in [{lo!r}, {hi!r}] V")
    if len(flips) > 1:
        spans = ", ".join(f"[{grid[i]:.6g}, {grid[i + 1]:.6g}]" for i in flips)
        raise CalibrationError(f"multiple delocalization windows in bracket: {spans}")
    i = flips[0]
    v_equal = brentq(probe.imbalance, grid[i], grid[i + 1], xtol=tol)
    a = max(lo, grid[i] - coarse_step)
    b = min(hi, grid[i + 1] + coarse_step)
    v_res = golden_section_min(probe.splitting, a, b, tol)

    fine = min(coarse_step, 1e-4)
    left = _boundary(probe, min(v_res, v_equal), lo, fine)
    right = _boundary(probe, max(v_res, v_equal), hi, fine)
    lv = probe(v_res)
    return CalibrationResult(
        occupancy=occupancy,
        v_res=float(v_res),
        v_equal=float(v_equal),
        delta_e_at_res=lv[1].energy - lv[0].energy,
        level_energies=(lv[0].energy, lv[1].energy),
        ground_fa=lv[0].f_a,
        ground_fb=lv[0].f_b,
        region_a=(float(lo), float(left)),
        hatched=(float(left), float(right)),
        region_b=(float(right), float(hi)),
    )


@dataclass(frozen=True)
class GateCalibration:
    """Two-state parameters of the target qubit during the CNOT pulse (angular frequencies in ps^-1)."""

    pulse_bias: float  # V_res for control |1>
    mean_frequency_on: float
    coupling: float  # c = dE_min / (2 hbar)
    mean_frequency_off: float
    detuning_off: float  # (omega_a - omega_b) / 2 with control |0> at pulse_bias
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def delta_over_c(self) -> float:
        return abs(self.detuning_off) / self.coupling

    @property
    def pulse_duration(self) -> float:
        return math.pi / (2.0 * self.coupling)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta_over_c"] = self.delta_over_c
        d["pulse_duration_ps"] = self.pulse_duration
        return d


def gate_calibration(geometry: QubitGeometry, cal_one: CalibrationResult, n_mesh: int = 1000,
                     refine_tol: float = 1e-12, occupancy_off: NeighborOccupancy = CONTROL_ZERO
                     ) -> GateCalibration:
    """Coupling from the control-|1> calibration and the control-|0> detuning at the same bias."""
    if cal_one.occupancy != CONTROL_ONE:
        raise CalibrationError("gate calibration needs the control-|1> calibration")
    e0, e1 = cal_one.level_energies
    gap_on = e1 - e0
    off = levels_at(geometry, occupancy_off, cal_one.v_res, n_mesh, refine_tol)
    gap_off = off[1].energy - off[0].energy
    bare = math.sqrt(max(gap_off**2 - gap_on**2, 0.0))
    # ground level sitting in dot a means dot a is the lower site
    sign = -1.0 if off[0].f_a >= off[0].f_b else 1.0
    return GateCalibration(
        pulse_bias=cal_one.v_res,
        mean_frequency_on=0.5 * (e0 + e1) / HBAR,
        coupling=gap_on / (2.0 * HBAR),
        mean_frequency_off=0.5 * (off[0].energy + off[1].energy) / HBAR,
        detuning_off=sign * bare / (2.0 * HBAR),
        extras={"gap_off_eV": gap_off, "ground_fa_off": off[0].f_a, "ground_fb_off": off[0].f_b},
    )
