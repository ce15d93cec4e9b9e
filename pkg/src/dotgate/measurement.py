"""FET-channel readout: threshold shift, current shift and shot-noise measurement time (SI)."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from .constants import E_CHARGE, EPS0_SI


@dataclass(frozen=True)
class DetectorParameters:
    transconductance: float  # A/V
    operating_current: float  # A
    inter_dot_distance: float  # nm
    dielectric_constant: float
    area_per_dot: float  # nm^2
    threshold_shift: float | None = None  # measured shift in V; replaces the estimate when set

    def __post_init__(self):
        for name in ("transconductance", "inter_dot_distance", "dielectric_constant", "area_per_dot"):
            if not getattr(self, name) > 0:
                raise ValueError(f"detector parameter {name} must be > 0")
        if self.operating_current < 0:
            raise ValueError("operating current must be >= 0")


# Si-nanocrystal memory figures; I_d back-solved so the shot-noise time is ~1.7 us
DETECTOR_PRESETS = {
    "guo": DetectorParameters(
        transconductance=1.8e-9,
        operating_current=7.7e-9,
        inter_dot_distance=6.5,
        dielectric_constant=4.0,
        area_per_dot=400.0,
        threshold_shift=0.030,
    ),
    "geometry": DetectorParameters(
        transconductance=1.8e-9,
        operating_current=7.7e-9,
        inter_dot_distance=6.5,
        dielectric_constant=4.0,
        area_per_dot=400.0,
    ),
}


def threshold_shift(det: DetectorParameters) -> float:
    """Parallel-plate threshold shift e d_ab / (eps0 eps A) of one displaced electron, V."""
    return E_CHARGE * det.inter_dot_distance * 1e-9 / (
        EPS0_SI * det.dielectric_constant * det.area_per_dot * 1e-18)


def current_shift(det: DetectorParameters, delta_vth: float) -> float:
    return -det.transconductance * delta_vth


def measurement_time(i_d: float, delta_i: float) -> float:
    """Shot-noise limited time to resolve a current change; inf when nothing changes."""
    if i_d < 0:
        raise ValueError(f"channel current must be >= 0, got {i_d!r}")
    di = abs(delta_i)
    if di == 0:
        return math.inf
    s0 = math.sqrt(i_d / E_CHARGE)
    s1 = math.sqrt((i_d + di) / E_CHARGE)
    # (s1 - s0)^2 without cancellation when i_d >> di
    diff = (di / E_CHARGE) / (s1 + s0)
    return 1.0 / diff**2


def damping_regime(tau_ms: float, delta: float) -> tuple[str, float | None]:
    """Weak damping when the qubit oscillates faster than the detector resolves, else strong + Zeno time."""
    if not tau_ms > 0 or not delta > 0:
        raise ValueError("tau_ms and delta must be > 0")
    rate = 1.0 / tau_ms
    if rate > delta:
        return "strong_damping", rate / (8.0 * delta**2)
    if rate == delta:
        warnings.warn("measurement rate equals the tunneling frequency; reporting weak damping", stacklevel=2)
    return "weak_damping", None


@dataclass(frozen=True)
class ReadoutReport:
    delta_vth: float
    delta_id: float
    tau_ms: float
    regime: str
    tau_zeno: float | None
    delta: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutReport":
        return cls(**d)


def readout_report(det: DetectorParameters, delta: float) -> ReadoutReport:
    dv = det.threshold_shift if det.threshold_shift is not None else threshold_shift(det)
    di = current_shift(det, dv)
    tau = measurement_time(det.operating_current, di)
    regime, tz = damping_regime(tau, delta) if math.isfinite(tau) else ("weak_damping", None)
    return ReadoutReport(dv, di, tau, regime, tz, delta)
