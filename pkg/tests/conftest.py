import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dotgate.calibration import find_resonant_bias, gate_calibration  # noqa: E402
from dotgate.device import CONTROL_ONE, CONTROL_ZERO, Layer, QubitGeometry, side_by_side_distances  # noqa: E402

# (label, thickness nm, band offset eV); every layer has m = 0.2
STACK = [
    ("channel_contact", 2.0, 0.0),
    ("barrier", 2.5, 3.1),
    ("dot_a", 6.0, 0.0),
    ("barrier", 1.5, 3.1),
    ("dot_b", 4.0, 0.0),
    ("barrier", 7.0, 3.1),
    ("gate_contact", 2.0, 0.0),
]
MASS = 0.2
BRACKET = (0.14, 0.18)


def make_geometry(stack=STACK, spacing=20.0, eps=4.0):
    layers = [Layer(label, t, v, MASS) for label, t, v in stack]
    return QubitGeometry(tuple(layers), eps, side_by_side_distances(layers, spacing))


def thick_inner_barrier(width=1.6):
    return [row if i != 3 else ("barrier", width, 3.1) for i, row in enumerate(STACK)]


@pytest.fixture(scope="session")
def geometry():
    return make_geometry()


@pytest.fixture(scope="session")
def cal_one(geometry):
    return find_resonant_bias(geometry, CONTROL_ONE, BRACKET)


@pytest.fixture(scope="session")
def cal_zero(geometry):
    return find_resonant_bias(geometry, CONTROL_ZERO, BRACKET)


@pytest.fixture(scope="session")
def gate(geometry, cal_one):
    return gate_calibration(geometry, cal_one)


@pytest.fixture(scope="session")
def wide_gap_gate():
    geo = make_geometry(thick_inner_barrier())
    return gate_calibration(geo, find_resonant_bias(geo, CONTROL_ONE, (0.13, 0.19)))
