"""Command-line front end: ``dotgate {scan,cnot,dynamics,budget,report}``.

Outputs go to ``--out`` (default: output.directory of the config).  CSV files
start with a ``# generated: <UTC time>`` line and JSON files carry the same
stamp in a ``_generated`` key on their second line; everything else is
byte-reproducible.  ``SOURCE_DATE_EPOCH`` pins the stamp.

Exit status: 0 success, 1 computational failure, 2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .calibration import (CalibrationError, CalibrationResult, find_resonant_bias, gate_calibration,
                          levels_at, scan_bias)
from .config import ConfigError, RunConfig, load_config, preset_names, validate_bits
from .constants import HBAR
from .device import CONTROL_ONE, CONTROL_ZERO, LayerLabel, build_potential
from .dynamics import (OffResonanceError, RegisterState, TwoStateHamiltonian, UnsupportedStateError, cnot,
                       cnot_hamiltonian, time_trace, transfer_time, tunneling_frequency_estimate)
from .environment import crossover_frequency, decoherence_report, delta_from_energy
from .measurement import readout_report
from .transfer import SolverError, transmission_spectrum

log = logging.getLogger("dotgate")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2
OCCUPANCIES = {"control1": CONTROL_ONE, "control0": CONTROL_ZERO}


def timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.12g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


class Writer:
    def __init__(self, directory: Path, formats, stamp: str):
        self.directory = Path(directory)
        self.formats = set(formats)
        self.stamp = stamp
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / name

    def csv(self, name: str, columns, rows):
        if "csv" not in self.formats:
            return
        lines = [f"# generated: {self.stamp}", ",".join(columns)]
        lines.extend(",".join(_fmt(x) for x in row) for row in rows)
        path = self._path(name)
        path.write_text("\n".join(lines) + "\n")
        self.written.append(path)

    def json(self, name: str, payload: dict):
        if "json" not in self.formats:
            return
        path = self._path(name)
        # "_" sorts before lowercase keys, so the stamp lands on its own second line
        body = json.dumps({"_generated": self.stamp, **_jsonable(payload)}, sort_keys=True, indent=2)
        path.write_text(body + "\n")
        self.written.append(path)


def read_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    data.pop("_generated", None)
    return data


class Pipeline:
    """Shared state of one CLI invocation: config, output writer and calibration cache."""

    def __init__(self, cfg: RunConfig, out: Path, threads: int):
        self.cfg = cfg
        self.threads = threads
        self.writer = Writer(out, cfg.output.formats, timestamp())
        self.cache_dir = out / ".cache"
        self._cal: dict[str, CalibrationResult] = {}

    def calibration(self, name: str) -> CalibrationResult:
        if name in self._cal:
            return self._cal[name]
        occ = OCCUPANCIES[name]
        s = self.cfg.scan
        path = self.cache_dir / f"calibration-{self.cfg.geometry_key(occ)}.json"
        if self.cfg.output.cache and path.is_file():
            log.info("calibration %s: cached %s", name, path.name)
            cal = CalibrationResult.from_dict(json.loads(path.read_text()))
        else:
            log.info("calibration %s: searching %s V", name, list(s.bias_range))
            cal = find_resonant_bias(self.cfg.geometry, occ, s.bias_range, tol=s.bias_tol,
                                     coarse_step=s.coarse_step, n_mesh=s.n_mesh, refine_tol=s.refine_tol)
            if self.cfg.output.cache:
                self.cache_dir.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(cal.to_dict(), sort_keys=True))
        self._cal[name] = cal
        return cal

    def gate(self):
        s = self.cfg.scan
        return gate_calibration(self.cfg.geometry, self.calibration("control1"), s.n_mesh, s.refine_tol)


def cmd_scan(p: Pipeline) -> dict:
    s = p.cfg.scan
    summary = {}
    for name, occ in OCCUPANCIES.items():
        cal = p.calibration(name)
        coarse = scan_bias(p.cfg.geometry, occ, s.bias_range, s.coarse_step, s.n_mesh, s.refine_tol, p.threads)
        lo = max(s.bias_range[0], cal.hatched[0] - s.fine_margin)
        hi = min(s.bias_range[1], cal.hatched[1] + s.fine_margin)
        fine = scan_bias(p.cfg.geometry, occ, (lo, hi), s.fine_step, s.n_mesh, s.refine_tol, p.threads)
        merged = coarse.merged(fine)
        p.writer.csv(f"scan_{name}.csv", ["bias_V", "E0_eV", "E1_eV", "dE_eV", "f_a", "f_b"],
                     [(v, e0, e1, e1 - e0, fa, fb) for v, e0, e1, fa, fb in merged.rows()])
        summary[name] = cal.to_dict()
    one, zero = p.calibration("control1"), p.calibration("control0")
    summary["v_res_control1_below_control0"] = one.v_res < zero.v_res
    summary["windows_disjoint"] = one.hatched[1] < zero.hatched[0] or zero.hatched[1] < one.hatched[0]
    summary["delta_e_control1_eV"] = one.delta_e_at_res
    # hbar / (2 dE): characteristic time of the level splitting at the control-|1> resonance
    summary["tau_splitting_ps"] = HBAR / (2.0 * one.delta_e_at_res)
    summary["swap_time_ps"] = math.pi * HBAR / one.delta_e_at_res
    p.writer.json("scan_summary.json", summary)
    print(f"V_res(control |1>) = {one.v_res:.7f} V, V_res(control |0>) = {zero.v_res:.7f} V, "
          f"dE = {one.delta_e_at_res:.4e} eV")
    return summary


def cmd_cnot(p: Pipeline, initial: str) -> dict:
    initial = validate_bits(initial, "--initial")
    gate = p.gate()
    register = RegisterState.from_bits(initial)
    report = cnot(register, gate, p.cfg.dynamics.pulse_duration_ps)
    h = cnot_hamiltonian(gate, int(initial[0]))
    ts, pa, pb = time_trace(register.target, h, report.pulse_duration_ps, p.cfg.dynamics.trace_points)
    p.writer.csv(f"cnot_{initial}_trace.csv", ["t_ps", "target_pop_a", "target_pop_b"], zip(ts, pa, pb))
    payload = {"report": report.to_dict(), "gate": gate.to_dict()}
    p.writer.json(f"cnot_{initial}.json", payload)
    print(f"CNOT |{initial}> -> |{report.final}>  infidelity {report.infidelity:.3e}  "
          f"pulse {report.pulse_duration_ps:.4g} ps  delta/c = {report.delta_over_c:.4g}")
    return payload


def _mean_dot_bottom(mesh) -> float:
    means = []
    for label in (LayerLabel.DOT_A, LayerLabel.DOT_B):
        a, b = mesh.regions[label.value]
        means.append(float(np.average(mesh.potential[a:b], weights=mesh.widths[a:b])))
    return 0.5 * (means[0] + means[1])


def cmd_dynamics(p: Pipeline) -> dict:
    d, s = p.cfg.dynamics, p.cfg.scan
    cal = p.calibration("control1")
    mesh = build_potential(p.cfg.geometry, cal.v_res, CONTROL_ONE, s.n_mesh)
    levels = levels_at(p.cfg.geometry, CONTROL_ONE, cal.v_res, s.n_mesh, s.refine_tol)
    E = d.incident_energy if d.incident_energy is not None else levels[0].energy - _mean_dot_bottom(mesh)
    omega0 = tunneling_frequency_estimate(d.barrier_height, E, d.well_width, d.barrier_width, d.mass)
    gate = p.gate()
    h = TwoStateHamiltonian.symmetric(gate.mean_frequency_on, gate.coupling)
    start = RegisterState.from_bits("10").target
    ts, pa, pb = time_trace(start, h, 2.0 * gate.pulse_duration, d.trace_points)
    p.writer.csv("rabi_trace.csv", ["t_ps", "pop_a", "pop_b"], zip(ts, pa, pb))
    p.writer.csv("wavefunction.csv", ["position_nm", "potential_eV", "psi2_E0", "psi2_E1"],
                 zip(mesh.positions, mesh.potential, levels[0].density, levels[1].density))
    lo, hi = s.energy_window
    energies = lo + s.energy_step * np.arange(int(math.floor((hi - lo) / s.energy_step + 1e-9)) + 1)
    spec = transmission_spectrum(mesh, energies, p.threads)
    p.writer.csv("spectrum.csv", ["energy_eV", "T"], zip(spec.energies, spec.transmission))
    payload = {
        "bias_V": cal.v_res,
        "level_energies_eV": [lv.energy for lv in levels],
        "incident_energy_eV": E,
        "estimate_omega0_per_ps": omega0,
        "estimate_transfer_time_ps": transfer_time(omega0),
        "solver_coupling_per_ps": gate.coupling,
        "solver_transfer_time_ps": gate.pulse_duration,
    }
    p.writer.json("dynamics.json", payload)
    print(f"estimated transfer time {payload['estimate_transfer_time_ps']:.4g} ps (E = {E:.4g} eV); "
          f"solver {gate.pulse_duration:.4g} ps")
    return payload


def cmd_budget(p: Pipeline) -> dict:
    d = p.cfg.dynamics
    delta = delta_from_energy(d.tunneling_energy)
    gate_time = d.gate_time_ps * 1e-12
    deco = decoherence_report(delta, p.cfg.bath, gate_time)
    readout = readout_report(p.cfg.detector, delta)
    payload = {
        "decoherence": deco.to_dict(),
        "readout": readout.to_dict(),
        "crossover_frequency_per_s": crossover_frequency(p.cfg.bath),
        "tau_ms_over_gate_time": readout.tau_ms / gate_time,
    }
    p.writer.json("budget.json", payload)
    verdict = ("weak damping: the qubit oscillates faster than the detector resolves"
               if readout.regime == "weak_damping" else
               f"strong damping: Zeno time {readout.tau_zeno:.3e} s")
    print(f"tau_so = {deco.tau_so_bare:.3e} s, ops per coherence time = {deco.ops_per_coherence:.3g}, "
          f"alpha = {deco.alpha_ohmic:.3e}")
    print(f"tau_ms = {readout.tau_ms:.3e} s ({readout.tau_ms / gate_time:.3g} gate times); {verdict}")
    return payload


def cmd_report(p: Pipeline) -> dict:
    out = {"scan": cmd_scan(p)}
    out["cnot"] = {bits: cmd_cnot(p, bits)["report"] for bits in ("00", "01", "10", "11")}
    out["dynamics"] = cmd_dynamics(p)
    out["budget"] = cmd_budget(p)
    p.writer.json("report.json", out)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration layered over the seed preset")
    common.add_argument("--out", help="output directory (default: output.directory)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for scan loops")
    common.add_argument("--seed-preset", default="default", help=f"base preset ({', '.join(preset_names())})")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="dotgate", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("scan", parents=[common], help="level map and resonant biases for both control states")
    c = sub.add_parser("cnot", parents=[common], help="controlled-NOT pulse on a two-bit basis state")
    c.add_argument("--initial", help="two-bit register state, control first (default: dynamics.initial)")
    sub.add_parser("dynamics", parents=[common], help="tunneling estimate, Rabi trace, wavefunction, spectrum")
    sub.add_parser("budget", parents=[common], help="decoherence and readout budget")
    sub.add_parser("report", parents=[common], help="run everything")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.seed_preset)
        out = Path(args.out) if args.out else cfg.output.directory
        p = Pipeline(cfg, out, args.threads)
        t0 = time.perf_counter()
        if args.command == "scan":
            cmd_scan(p)
        elif args.command == "cnot":
            cmd_cnot(p, args.initial if args.initial is not None else cfg.dynamics.initial)
        elif args.command == "dynamics":
            cmd_dynamics(p)
        elif args.command == "budget":
            cmd_budget(p)
        else:
            cmd_report(p)
        log.info("%s done in %.1f s", args.command, time.perf_counter() - t0)
    except (ConfigError, UnsupportedStateError) as exc:
        print(f"dotgate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, CalibrationError, OffResonanceError, FloatingPointError, ValueError) as exc:
        print(f"dotgate: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for path in p.writer.written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
