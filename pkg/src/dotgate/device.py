"""Layer-stack geometry and the 1D potential/mass profile of a qubit.

A qubit is one excess electron in two tunnel-coupled dots embedded in the
gate insulator.  The stack is ordered from the channel contact to the gate
contact; the larger dot (``dot_a``, state |1>) sits on the channel side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .constants import COULOMB_K


class GeometryError(ValueError):
    """Raised when a layer stack or occupancy violates its invariants."""


class LayerLabel(str, Enum):
    CHANNEL_CONTACT = "channel_contact"
    BARRIER = "barrier"
    DOT_A = "dot_a"
    DOT_B = "dot_b"
    GATE_CONTACT = "gate_contact"


@dataclass(frozen=True)
class Layer:
    label: LayerLabel
    thickness: float  # nm
    band_offset: float  # eV
    effective_mass: float  # m0

    def __post_init__(self):
        object.__setattr__(self, "label", LayerLabel(self.label))
        if not self.thickness > 0:
            raise GeometryError(f"{self.label.value}: thickness must be > 0, got {self.thickness}")
        if not self.effective_mass > 0:
            raise GeometryError(
                f"{self.label.value}: effective mass must be > 0, got {self.effective_mass}"
            )


# keys are (own dot, neighbor dot), e.g. ("a", "b") is r_{a1 b2}
DistanceMap = Mapping[tuple[str, str], float]
_DISTANCE_KEYS = (("a", "a"), ("a", "b"), ("b", "a"), ("b", "b"))


@dataclass(frozen=True)
class QubitGeometry:
    layers: tuple[Layer, ...]
    dielectric_constant: float
    neighbor_distances: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        labels = [layer.label for layer in self.layers]
        if not self.dielectric_constant > 0:
            raise GeometryError(f"dielectric constant must be > 0, got {self.dielectric_constant}")
        if len(labels) < 3:
            raise GeometryError("a qubit stack needs at least three layers")
        if labels[0] is not LayerLabel.CHANNEL_CONTACT or labels[-1] is not LayerLabel.GATE_CONTACT:
            raise GeometryError("stack must start with channel_contact and end with gate_contact")
        for lab in (LayerLabel.CHANNEL_CONTACT, LayerLabel.GATE_CONTACT):
            if labels.count(lab) != 1:
                raise GeometryError(f"exactly one {lab.value} layer required")
        for lab in (LayerLabel.DOT_A, LayerLabel.DOT_B):
            if labels.count(lab) != 1:
                raise GeometryError(f"exactly one {lab.value} layer required, got {labels.count(lab)}")
        if labels.index(LayerLabel.DOT_A) > labels.index(LayerLabel.DOT_B):
            raise GeometryError("dot_a must precede dot_b in channel-to-gate order")
        dist = {tuple(k): float(v) for k, v in dict(self.neighbor_distances).items()}
        for key in _DISTANCE_KEYS:
            if key not in dist:
                raise GeometryError(f"missing neighbor distance r_{key[0]}1{key[1]}2")
            if not dist[key] > 0:
                raise GeometryError(f"neighbor distance r_{key[0]}1{key[1]}2 must be > 0")
        object.__setattr__(self, "neighbor_distances", dist)

    def index(self, label: LayerLabel) -> int:
        return [layer.label for layer in self.layers].index(LayerLabel(label))

    def layer_bounds(self, label: LayerLabel) -> tuple[float, float]:
        """Start and end position (nm) of the first layer with ``label``."""
        i = self.index(label)
        start = sum(layer.thickness for layer in self.layers[:i])
        return start, start + self.layers[i].thickness

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def dot_center_offset(self) -> float:
        """Distance (nm) between the centers of dot_a and dot_b along the stack."""
        a0, a1 = self.layer_bounds(LayerLabel.DOT_A)
        b0, b1 = self.layer_bounds(LayerLabel.DOT_B)
        return 0.5 * (b0 + b1) - 0.5 * (a0 + a1)


def side_by_side_distances(layers, lateral_spacing: float) -> dict[tuple[str, str], float]:
    """Inter-qubit dot distances for two identical stacks placed side by side.

    Same-size dots are ``lateral_spacing`` apart; cross distances add the
    vertical dot_a/dot_b center offset in quadrature.
    """
    geo_offsets = []
    pos = 0.0
    for layer in layers:
        if LayerLabel(layer.label) in (LayerLabel.DOT_A, LayerLabel.DOT_B):
            geo_offsets.append(pos + 0.5 * layer.thickness)
        pos += layer.thickness
    if len(geo_offsets) != 2:
        raise GeometryError("stack needs one dot_a and one dot_b")
    dz = abs(geo_offsets[1] - geo_offsets[0])
    cross = math.hypot(lateral_spacing, dz)
    return {("a", "a"): lateral_spacing, ("a", "b"): cross, ("b", "a"): cross, ("b", "b"): lateral_spacing}


@dataclass(frozen=True)
class NeighborOccupancy:
    """Charge of the neighboring (control) qubit on its dot_a / dot_b."""

    rho_a2: float
    rho_b2: float

    def __post_init__(self):
        for name in ("rho_a2", "rho_b2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise GeometryError(f"{name} must lie in [0, 1], got {v}")
        if self.rho_a2 + self.rho_b2 > 1.0 + 1e-12:
            raise GeometryError("rho_a2 + rho_b2 must not exceed 1 (one electron per qubit)")


CONTROL_ONE = NeighborOccupancy(1.0, 0.0)
CONTROL_ZERO = NeighborOccupancy(0.0, 1.0)


def coulomb_shift(eps: float, r: float, rho: float) -> float:
    """Potential-energy shift (eV) of a dot from a neighbor charge ``rho`` at distance ``r`` nm."""
    if not r > 0:
        raise ValueError(f"distance must be > 0, got {r}")
    if not eps > 0:
        raise ValueError(f"dielectric constant must be > 0, got {eps}")
    return rho * COULOMB_K / (eps * r)


@dataclass(frozen=True, eq=False)
class PotentialMesh:
    """Piecewise-constant potential and mass on ``N`` cells.

    The first and last cells are semi-infinite leads when the mesh is fed to
    the transfer-matrix solver.  ``regions`` maps a layer label to the cell
    index range ``(start, stop)`` it occupies.
    """

    edges: np.ndarray
    potential: np.ndarray
    mass: np.ndarray
    regions: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        edges = np.ascontiguousarray(self.edges, dtype=float)
        pot = np.ascontiguousarray(self.potential, dtype=float)
        mass = np.ascontiguousarray(self.mass, dtype=float)
        if pot.ndim != 1 or pot.shape != mass.shape or edges.shape != (pot.size + 1,):
            raise GeometryError("edges must have one more entry than potential and mass")
        if pot.size < 3:
            raise GeometryError("a mesh needs at least 3 cells")
        if np.any(np.diff(edges) <= 0):
            raise GeometryError("cell edges must be strictly increasing")
        if np.any(mass <= 0):
            raise GeometryError("effective mass must be positive")
        for arr in (edges, pot, mass):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "potential", pot)
        object.__setattr__(self, "mass", mass)

    @property
    def positions(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def __len__(self):
        return self.potential.size

    def mirrored(self) -> "PotentialMesh":
        """Mesh reflected about its midpoint (channel and gate swapped)."""
        x0, x1 = self.edges[0], self.edges[-1]
        n = len(self)
        regions = {k: (n - b, n - a) for k, (a, b) in self.regions.items()}
        return PotentialMesh((x0 + x1) - self.edges[::-1], self.potential[::-1], self.mass[::-1], regions)

    @classmethod
    def from_segments(cls, widths, potentials, masses, cells=1) -> "PotentialMesh":
        """Mesh of constant segments; ``cells`` (int or per-segment) subdivides each one."""
        widths = np.asarray(widths, dtype=float)
        cells = np.broadcast_to(np.asarray(cells, dtype=int), widths.shape)
        edges = [0.0]
        pot, mass = [], []
        for w, v, m, n in zip(widths, np.broadcast_to(potentials, widths.shape),
                              np.broadcast_to(masses, widths.shape), cells):
            for _ in range(n):
                edges.append(edges[-1] + w / n)
                pot.append(v)
                mass.append(m)
        return cls(np.array(edges), np.array(pot), np.array(mass))


def _allocate_cells(thicknesses, n_mesh: int, minimum: int = 3) -> list[int]:
    total = sum(thicknesses)
    raw = [n_mesh * t / total for t in thicknesses]
    counts = [max(minimum, int(math.floor(r))) for r in raw]
    # minimum-size bumps may overshoot; repay from the layers furthest above their share
    while sum(counts) > n_mesh:
        i = max((i for i in range(len(counts)) if counts[i] > minimum), key=lambda i: counts[i] - raw[i])
        counts[i] -= 1
    # largest remainder on whatever budget is left
    spare = n_mesh - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (raw[i] - math.floor(raw[i]), -i), reverse=True)
    for i in order:
        if spare <= 0:
            break
        counts[i] += 1
        spare -= 1
    return counts


def build_potential(geometry: QubitGeometry, gate_bias: float, occupancy: NeighborOccupancy,
                    n_mesh: int = 1000) -> PotentialMesh:
    """Potential energy profile (eV) of the target qubit under ``gate_bias`` (V).

    Layer band offsets, plus a linear drop of ``gate_bias`` across the
    insulating stack (channel contact at 0, gate contact at ``-gate_bias``),
    plus the neighbor-charge Coulomb shift inside each dot.
    """
    layers = geometry.layers
    if n_mesh < 3 * len(layers):
        raise GeometryError(f"n_mesh must be at least {3 * len(layers)} for {len(layers)} layers")
    counts = _allocate_cells([layer.thickness for layer in layers], n_mesh)

    eps = geometry.dielectric_constant
    r = geometry.neighbor_distances
    shift = {
        LayerLabel.DOT_A: coulomb_shift(eps, r[("a", "a")], occupancy.rho_a2)
        + coulomb_shift(eps, r[("a", "b")], occupancy.rho_b2),
        LayerLabel.DOT_B: coulomb_shift(eps, r[("b", "a")], occupancy.rho_a2)
        + coulomb_shift(eps, r[("b", "b")], occupancy.rho_b2),
    }

    edges = [0.0]
    pot, mass = [], []
    regions: dict[str, tuple[int, int]] = {}
    pos = 0.0
    for layer, n in zip(layers, counts):
        start = len(pot)
        dx = layer.thickness / n
        for j in range(1, n + 1):
            edges.append(pos + layer.thickness if j == n else pos + j * dx)
        pot.extend([layer.band_offset + shift.get(layer.label, 0.0)] * n)
        mass.extend([layer.effective_mass] * n)
        regions.setdefault(layer.label.value, (start, start + n))
        pos += layer.thickness

    edges = np.array(edges)
    pot = np.array(pot)
    centers = 0.5 * (edges[1:] + edges[:-1])
    x_start = edges[regions[LayerLabel.CHANNEL_CONTACT.value][1]]
    x_end = edges[regions[LayerLabel.GATE_CONTACT.value][0]]
    frac = np.clip((centers - x_start) / (x_end - x_start), 0.0, 1.0)
    pot = pot - gate_bias * frac
    return PotentialMesh(edges, pot, np.array(mass), regions)
