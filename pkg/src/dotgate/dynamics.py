"""Two-state dynamics of the qubit and the controlled-NOT pulse.

Amplitudes: ``a`` on dot a (state |1>), ``b`` on dot b (state |0>).  Times in
ps, angular frequencies in ps^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import GateCalibration
from .constants import HBAR, HBAR2_2M0


class UnsupportedStateError(ValueError):
    """The register holds a state the product-state simulator cannot represent."""


class OffResonanceError(ValueError):
    pass


@dataclass(frozen=True)
class TwoStateHamiltonian:
    omega_a: float
    omega_b: float
    c_a: float
    c_b: float

    def __post_init__(self):
        if self.c_a * self.c_b < 0:
            raise ValueError("c_a * c_b must be non-negative")

    @property
    def coupling(self) -> float:
        """Effective real coupling sqrt(c_a c_b)."""
        return math.sqrt(self.c_a * self.c_b)

    @property
    def detuning(self) -> float:
        return 0.5 * (self.omega_a - self.omega_b)

    @property
    def omega0(self) -> float:
        return math.sqrt(self.detuning**2 + self.c_a * self.c_b)

    def on_resonance(self, rel: float = 1e-3) -> bool:
        return abs(self.omega_a - self.omega_b) < rel * self.omega0

    @classmethod
    def symmetric(cls, omega: float, c: float) -> "TwoStateHamiltonian":
        return cls(omega, omega, c, c)


@dataclass(frozen=True)
class QubitState:
    a: complex
    b: complex

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |a|^2 + |b|^2 = {norm!r}")

    @classmethod
    def one(cls) -> "QubitState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def zero(cls) -> "QubitState":
        return cls(0j, 1.0 + 0j)

    @classmethod
    def from_bit(cls, bit: int) -> "QubitState":
        return cls.one() if int(bit) else cls.zero()

    @property
    def populations(self) -> tuple[float, float]:
        return abs(self.a) ** 2, abs(self.b) ** 2

    def basis_bit(self, tol: float = 1e-6) -> int | None:
        """1 or 0 for a computational basis state within ``tol`` population, else None."""
        pa, pb = self.populations
        if pa >= 1.0 - tol:
            return 1
        if pb >= 1.0 - tol:
            return 0
        return None

    def nearest_bit(self) -> int:
        return 1 if self.populations[0] > 0.5 else 0


@dataclass(frozen=True)
class RegisterState:
    control: QubitState
    target: QubitState

    @classmethod
    def from_bits(cls, bits: str) -> "RegisterState":
        if not isinstance(bits, str) or len(bits) != 2 or any(ch not in "01" for ch in bits):
            raise ValueError(f"register bits must be a two-character string of 0/1, got {bits!r}")
        return cls(QubitState.from_bit(int(bits[0])), QubitState.from_bit(int(bits[1])))


def eigenfrequencies(h: TwoStateHamiltonian) -> tuple[float, float]:
    mean = 0.5 * (h.omega_a + h.omega_b)
    return mean + h.omega0, mean - h.omega0


def propagator(h: TwoStateHamiltonian, t: float) -> np.ndarray:
    """exp(-i H t) for H = [[omega_a, c], [c, omega_b]], c = sqrt(c_a c_b)."""
    mean = 0.5 * (h.omega_a + h.omega_b)
    d = h.detuning
    c = h.coupling
    w0 = h.omega0
    cos = math.cos(w0 * t)
    # sin(w0 t)/w0 -> t as w0 -> 0
    sinc = math.sin(w0 * t) / w0 if w0 > 0 else t
    phase = complex(math.cos(mean * t), -math.sin(mean * t))
    u = np.array([[cos - 1j * d * sinc, -1j * c * sinc],
                  [-1j * c * sinc, cos + 1j * d * sinc]])
    return phase * u


def evolve(state: QubitState, h: TwoStateHamiltonian, t: float) -> QubitState:
    u = propagator(h, t)
    a = u[0, 0] * state.a + u[0, 1] * state.b
    b = u[1, 0] * state.a + u[1, 1] * state.b
    return QubitState(complex(a), complex(b))


def time_trace(state: QubitState, h: TwoStateHamiltonian, t_end: float, n: int = 401):
    """Arrays (t_ps, pop_a, pop_b) over [0, t_end]."""
    ts = np.linspace(0.0, t_end, n)
    pa = np.empty(n)
    pb = np.empty(n)
    for i, t in enumerate(ts):
        s = evolve(state, h, t)
        pa[i], pb[i] = s.populations
    return ts, pa, pb


def tunneling_frequency_estimate(V0: float, E: float, l_w: float, l_d: float, m: float) -> float:
    """Analytic coupled-well tunneling frequency omega_0 (ps^-1).

    ``V0`` barrier height and ``E`` electron energy (eV, both from the well
    bottom), ``l_w`` mean dot width and ``l_d`` barrier width (nm).
    """
    if not 0.0 < E < V0:
        raise ValueError(f"incident energy must lie in (0, V0), got E={E!r}, V0={V0!r}")
    K = math.sqrt(m * (V0 - E) / HBAR2_2M0)
    return 4.0 / HBAR * ((V0 - E) / V0) * (E / (1.0 + K * l_w)) * math.exp(-K * l_d)


def transfer_time(omega0: float) -> float:
    """Time for a complete population swap, pi / (2 omega_0)."""
    return math.pi / (2.0 * omega0)


def _require_resonant(h: TwoStateHamiltonian):
    if not h.on_resonance():
        raise OffResonanceError(
            f"pulse needs omega_a == omega_b (|omega_a - omega_b| = {abs(h.omega_a - h.omega_b):.3g}, "
            f"omega_0 = {h.omega0:.3g}); calibrate the gate bias first")


def not_pulse(state: QubitState, h: TwoStateHamiltonian) -> QubitState:
    _require_resonant(h)
    return evolve(state, h, math.pi / (2.0 * h.omega0))


def half_pulse(state: QubitState, h: TwoStateHamiltonian) -> QubitState:
    _require_resonant(h)
    return evolve(state, h, math.pi / (4.0 * h.omega0))


@dataclass(frozen=True)
class GateReport:
    initial: str
    final: str
    final_register: RegisterState
    flip_probability: float  # target population moved between dots
    infidelity: float
    pulse_duration_ps: float
    delta_over_c: float

    def to_dict(self) -> dict:
        def amp(q):
            return {"a": [q.a.real, q.a.imag], "b": [q.b.real, q.b.imag]}

        return {
            "initial": self.initial,
            "final": self.final,
            "control": amp(self.final_register.control),
            "target": amp(self.final_register.target),
            "flip_probability": self.flip_probability,
            "infidelity": self.infidelity,
            "pulse_duration_ps": self.pulse_duration_ps,
            "delta_over_c": self.delta_over_c,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GateReport":
        def q(x):
            return QubitState(complex(*x["a"]), complex(*x["b"]))

        return cls(d["initial"], d["final"], RegisterState(q(d["control"]), q(d["target"])),
                   d["flip_probability"], d["infidelity"], d["pulse_duration_ps"], d["delta_over_c"])


def cnot_hamiltonian(gate: GateCalibration, control_bit: int) -> TwoStateHamiltonian:
    c = gate.coupling
    if control_bit:
        return TwoStateHamiltonian.symmetric(gate.mean_frequency_on, c)
    d = gate.detuning_off
    w = gate.mean_frequency_off
    return TwoStateHamiltonian(w + d, w - d, c, c)


def cnot(register: RegisterState, gate: GateCalibration | None, duration: float | None = None) -> GateReport:
    """Pulse the target at V_res^(1) for pi/(2c) (or ``duration`` ps); the control charge stays frozen.

    For control |0> the target is detuned and the reported infidelity is the
    worst-case residual flip probability c^2/(c^2 + delta^2).
    """
    if gate is None:
        raise ValueError("cnot needs a gate calibration")
    ctrl = register.control.basis_bit()
    if ctrl is None:
        raise UnsupportedStateError("control qubit must be a computational basis state")
    t = gate.pulse_duration if duration is None else float(duration)
    h = cnot_hamiltonian(gate, ctrl)
    before = register.target.populations
    target = evolve(register.target, h, t)
    after = target.populations
    flip = abs(after[0] - before[0])
    if ctrl:
        infidelity = 1.0 - flip
    else:
        c2 = gate.coupling**2
        infidelity = c2 / (c2 + gate.detuning_off**2)
    initial = f"{ctrl}{register.target.nearest_bit()}"
    final = f"{ctrl}{target.nearest_bit()}"
    return GateReport(initial, final, RegisterState(register.control, target), float(flip),
                      float(max(infidelity, 0.0)), t, gate.delta_over_c)
