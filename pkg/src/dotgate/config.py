"""Run configuration: YAML file with versioned sections, presets and env overrides.

Layering, lowest to highest precedence: shipped preset, ``--config`` file,
``DOTGATE__SECTION__KEY`` environment variables.  Every value remembers where
it came from so validation errors point at a file line.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .device import (GeometryError, Layer, NeighborOccupancy, QubitGeometry,
                     side_by_side_distances)
from .environment import BATH_PRESETS, BathParameters
from .measurement import DETECTOR_PRESETS, DetectorParameters

CONFIG_VERSION = 1
ENV_PREFIX = "DOTGATE__"
SECTIONS = ("geometry", "scan", "dynamics", "bath", "detector", "output")


class ConfigError(ValueError):
    pass


def preset_names() -> list[str]:
    return sorted(p.stem for p in (resources.files("dotgate") / "presets").iterdir() if p.name.endswith(".yaml"))


def _preset_text(name: str) -> str:
    path = resources.files("dotgate") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown config preset {name!r} (available: {', '.join(preset_names())})")
    return path.read_text()


def _line_map(node, origin: str, path=(), out=None) -> dict:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, val in node.value:
            p = path + (key.value,)
            out[p] = f"{origin}:{key.start_mark.line + 1}"
            _line_map(val, origin, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            out[path + (i,)] = f"{origin}:{item.start_mark.line + 1}"
            _line_map(item, origin, path + (i,), out)
    return out


def _parse(text: str, origin: str) -> tuple[dict, dict]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{origin}:{mark.line + 1}" if mark else origin
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}:1: top level must be a mapping")
    return data, _line_map(node, origin)


def _merge(base: dict, over: dict, lines: dict, over_lines: dict, path=()):
    for k, v in over.items():
        p = path + (k,)
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v, lines, over_lines, p)
        else:
            base[k] = v
            # drop stale marks below a replaced subtree
            for stale in [q for q in lines if q[:len(p)] == p]:
                del lines[stale]
            lines.update({q: s for q, s in over_lines.items() if q[:len(p)] == p})


def _resolve_keys(parts, base) -> list:
    """Match env-var key segments case-insensitively against keys already in the config."""
    keys, node = [], base
    for part in parts:
        known = {str(k).lower(): k for k in node} if isinstance(node, dict) else {}
        key = known.get(part.lower(), part.lower())
        keys.append(key)
        node = node.get(key) if isinstance(node, dict) else None
    return keys


def _env_overrides(environ, base: dict) -> tuple[dict, dict]:
    data: dict = {}
    lines: dict = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        keys = _resolve_keys([k for k in name[len(ENV_PREFIX):].split("__") if k], base)
        if not keys:
            continue
        try:
            value = yaml.safe_load(environ[name])
        except yaml.YAMLError:
            raise ConfigError(f"env {name}: value is not valid YAML") from None
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"env {name}: conflicts with another override")
        node[keys[-1]] = value
        lines[tuple(keys)] = f"env {name}"
    return data, lines


class _Reader:
    """Typed access into one config section with source-located errors."""

    def __init__(self, data: dict, lines: dict, path: tuple):
        self.data = data
        self.lines = lines
        self.path = path

    def where(self, *keys) -> str:
        p = self.path + keys
        while p:
            if p in self.lines:
                return self.lines[p]
            p = p[:-1]
        return "config"

    def fail(self, keys, msg):
        raise ConfigError(f"{self.where(*keys)}: {'.'.join(map(str, self.path + keys))}: {msg}")

    def get(self, key, kind=float, default=..., optional=False):
        if key not in self.data or self.data[key] is None and not optional:
            if default is ...:
                self.fail((key,), "missing required key")
            return default
        v = self.data[key]
        if v is None:
            return None
        try:
            if kind is float:
                if isinstance(v, bool):
                    raise TypeError
                return float(v)
            if kind is int:
                if isinstance(v, bool) or float(v) != int(v):
                    raise TypeError
                return int(v)
            if kind is str:
                return str(v)
            if kind is bool:
                if not isinstance(v, bool):
                    raise TypeError
                return v
        except (TypeError, ValueError):
            self.fail((key,), f"expected {kind.__name__}, got {v!r}")
        return v

    def pair(self, key, default=...):
        v = self.data.get(key, default)
        if v is ...:
            self.fail((key,), "missing required key")
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            self.fail((key,), f"expected a two-element list, got {v!r}")
        try:
            return float(v[0]), float(v[1])
        except (TypeError, ValueError):
            self.fail((key,), f"expected numbers, got {v!r}")

    def sub(self, key) -> "_Reader":
        v = self.data.get(key)
        if not isinstance(v, dict):
            self.fail((key,), "expected a mapping")
        return _Reader(v, self.lines, self.path + (key,))

    def check_keys(self, allowed):
        for k in self.data:
            if k not in allowed:
                self.fail((k,), f"unknown key (allowed: {', '.join(sorted(allowed))})")


@dataclass(frozen=True)
class ScanSettings:
    bias_range: tuple[float, float]
    coarse_step: float
    fine_step: float
    fine_margin: float
    bias_tol: float
    n_mesh: int
    refine_tol: float
    energy_window: tuple[float, float]
    energy_step: float


@dataclass(frozen=True)
class DynamicsSettings:
    initial: str
    trace_points: int
    pulse_duration_ps: float | None
    well_width: float
    barrier_width: float
    barrier_height: float
    mass: float
    incident_energy: float | None
    tunneling_energy: float
    gate_time_ps: float


@dataclass(frozen=True)
class OutputSettings:
    directory: Path
    formats: tuple[str, ...]
    cache: bool


@dataclass(frozen=True)
class RunConfig:
    geometry: QubitGeometry
    area_per_dot: float | None
    scan: ScanSettings
    dynamics: DynamicsSettings
    bath: BathParameters
    detector: DetectorParameters
    output: OutputSettings
    raw: dict = field(compare=False, repr=False, default_factory=dict)

    def geometry_key(self, occupancy: NeighborOccupancy) -> str:
        """Content hash of everything a calibration depends on."""
        s = self.scan
        payload = {
            "layers": [[l.label.value, l.thickness, l.band_offset, l.effective_mass] for l in self.geometry.layers],
            "eps": self.geometry.dielectric_constant,
            "dist": sorted([list(k), v] for k, v in self.geometry.neighbor_distances.items()),
            "occupancy": [occupancy.rho_a2, occupancy.rho_b2],
            "scan": [s.bias_range, s.coarse_step, s.bias_tol, s.n_mesh, s.refine_tol],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:20]


def _geometry(r: _Reader) -> tuple[QubitGeometry, float | None]:
    r.check_keys({"dielectric_constant", "lateral_spacing_nm", "distances_nm", "layers", "area_per_dot_nm2"})
    raw_layers = r.data.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        r.fail(("layers",), "expected a non-empty list of layers")
    layers = []
    for i, item in enumerate(raw_layers):
        if not isinstance(item, dict):
            r.fail(("layers", i), "each layer must be a mapping")
        lr = _Reader(item, r.lines, r.path + ("layers", i))
        lr.check_keys({"label", "thickness_nm", "band_offset_eV", "mass"})
        try:
            layers.append(Layer(lr.get("label", str), lr.get("thickness_nm"), lr.get("band_offset_eV"),
                                lr.get("mass")))
        except (GeometryError, ValueError) as exc:
            lr.fail((), str(exc))
    eps = r.get("dielectric_constant")
    if "distances_nm" in r.data:
        dr = r.sub("distances_nm")
        dr.check_keys({"aa", "ab", "ba", "bb"})
        dist = {(k[0], k[1]): dr.get(k) for k in ("aa", "ab", "ba", "bb")}
    else:
        try:
            dist = side_by_side_distances(layers, r.get("lateral_spacing_nm"))
        except GeometryError as exc:
            r.fail(("layers",), str(exc))
    try:
        geo = QubitGeometry(tuple(layers), eps, dist)
    except GeometryError as exc:
        r.fail((), str(exc))
    area = r.get("area_per_dot_nm2", default=None)
    if area is not None and not area > 0:
        r.fail(("area_per_dot_nm2",), "must be > 0")
    return geo, area


def _scan(r: _Reader) -> ScanSettings:
    r.check_keys({
        "bias_range_V", "coarse_step_V", "fine_step_V", "fine_margin_V", "bias_tol_V", "n_mesh",
        "refine_tol_eV", "energy_window_eV", "energy_step_eV"})
    s = ScanSettings(
        bias_range=r.pair("bias_range_V"),
        coarse_step=r.get("coarse_step_V"),
        fine_step=r.get("fine_step_V"),
        fine_margin=r.get("fine_margin_V"),
        bias_tol=r.get("bias_tol_V"),
        n_mesh=r.get("n_mesh", int),
        refine_tol=r.get("refine_tol_eV"),
        energy_window=r.pair("energy_window_eV"),
        energy_step=r.get("energy_step_eV"),
    )
    if not s.bias_range[1] > s.bias_range[0]:
        r.fail(("bias_range_V",), f"empty bias range {list(s.bias_range)}")
    if not s.energy_window[1] > s.energy_window[0]:
        r.fail(("energy_window_eV",), f"empty energy window {list(s.energy_window)}")
    for key in ("coarse_step_V", "fine_step_V", "bias_tol_V", "refine_tol_eV", "energy_step_eV"):
        if not r.get(key) > 0:
            r.fail((key,), "must be > 0")
    if s.fine_margin < 0:
        r.fail(("fine_margin_V",), "must be >= 0")
    if s.n_mesh < 10:
        r.fail(("n_mesh",), "must be at least 10")
    return s


def validate_bits(bits, where="initial") -> str:
    if not isinstance(bits, str) or len(bits) != 2 or any(ch not in "01" for ch in bits):
        raise ConfigError(f"{where}: register state must be a two-character string of 0/1, got {bits!r}")
    return bits


def _dynamics(r: _Reader) -> DynamicsSettings:
    r.check_keys({"initial", "trace_points", "pulse_duration_ps", "well_width_nm", "barrier_width_nm",
                  "barrier_height_eV", "mass", "incident_energy_eV", "tunneling_energy_eV", "gate_time_ps"})
    initial = r.data.get("initial", "10")
    try:
        validate_bits(initial)
    except ConfigError as exc:
        r.fail(("initial",), str(exc).split(": ", 1)[1])
    d = DynamicsSettings(
        initial=initial,
        trace_points=r.get("trace_points", int, 401),
        pulse_duration_ps=r.get("pulse_duration_ps", default=None, optional=True),
        well_width=r.get("well_width_nm"),
        barrier_width=r.get("barrier_width_nm"),
        barrier_height=r.get("barrier_height_eV"),
        mass=r.get("mass"),
        incident_energy=r.get("incident_energy_eV", default=None, optional=True),
        tunneling_energy=r.get("tunneling_energy_eV"),
        gate_time_ps=r.get("gate_time_ps"),
    )
    for key in ("well_width_nm", "barrier_width_nm", "barrier_height_eV", "mass", "tunneling_energy_eV",
                "gate_time_ps"):
        if not r.get(key) > 0:
            r.fail((key,), "must be > 0")
    if d.trace_points < 2:
        r.fail(("trace_points",), "must be at least 2")
    if d.pulse_duration_ps is not None and not d.pulse_duration_ps > 0:
        r.fail(("pulse_duration_ps",), "must be > 0")
    return d


def _with_preset(r: _Reader, presets: dict, fields: tuple[str, ...], cls):
    """Named preset with optional per-field overrides, or a full explicit parameter set."""
    r.check_keys({"preset", *fields})
    name = r.data.get("preset")
    if name is not None:
        if name not in presets:
            r.fail(("preset",), f"unknown preset {name!r} (available: {', '.join(sorted(presets))})")
        values = asdict(presets[name])
    else:
        values = {}
    for f in fields:
        if f in r.data:
            values[f] = r.get(f, optional=True)
    missing = [f for f in fields if f not in values]
    if missing and not (cls is DetectorParameters and missing == ["threshold_shift"]):
        r.fail((), f"missing keys {missing} (or give a preset)")
    try:
        return cls(**values)
    except ValueError as exc:
        r.fail((), str(exc))


def _output(r: _Reader) -> OutputSettings:
    r.check_keys({"directory", "formats", "cache"})
    formats = r.data.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"} or not formats:
        r.fail(("formats",), f"expected a subset of [csv, json], got {formats!r}")
    return OutputSettings(Path(r.get("directory", str, "out")), tuple(formats), r.get("cache", bool, True))


def load_config(path: str | os.PathLike | None = None, preset: str = "default", environ=None) -> RunConfig:
    data, lines = _parse(_preset_text(preset), f"preset:{preset}")
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror}") from None
        over, over_lines = _parse(text, str(p))
        _merge(data, over, lines, over_lines)
    env, env_lines = _env_overrides(os.environ if environ is None else environ, data)
    _merge(data, env, lines, env_lines)
    return config_from_dict(data, lines)


def config_from_dict(data: dict, lines: dict | None = None) -> RunConfig:
    root = _Reader(data, lines or {}, ())
    root.check_keys({"config_version", *SECTIONS})
    version = data.get("config_version")
    if version != CONFIG_VERSION:
        root.fail(("config_version",), f"unsupported config_version {version!r} (expected {CONFIG_VERSION})")
    geometry, area = _geometry(root.sub("geometry"))
    detector = _with_preset(root.sub("detector"), DETECTOR_PRESETS,
                            tuple(f for f in DetectorParameters.__dataclass_fields__), DetectorParameters)
    if area is not None:
        detector = DetectorParameters(**{**asdict(detector), "area_per_dot": area})
    return RunConfig(
        geometry=geometry,
        area_per_dot=area,
        scan=_scan(root.sub("scan")),
        dynamics=_dynamics(root.sub("dynamics")),
        bath=_with_preset(root.sub("bath"), BATH_PRESETS,
                          tuple(f for f in BathParameters.__dataclass_fields__), BathParameters),
        detector=detector,
        output=_output(root.sub("output")),
        raw=data,
    )


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.raw, sort_keys=False)
