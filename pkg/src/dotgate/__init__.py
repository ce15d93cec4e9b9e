"""Coupled asymmetric double-dot charge qubits: levels, gate calibration, CNOT dynamics and budgets."""

from .device import (CONTROL_ONE, CONTROL_ZERO, Layer, LayerLabel, NeighborOccupancy, PotentialMesh,
                     QubitGeometry, build_potential)
from .transfer import find_resonances, lowest_levels, transmission

__version__ = "0.1.0"

__all__ = [
    "CONTROL_ONE", "CONTROL_ZERO", "Layer", "LayerLabel", "NeighborOccupancy", "PotentialMesh",
    "QubitGeometry", "build_potential", "find_resonances", "lowest_levels", "transmission",
]
