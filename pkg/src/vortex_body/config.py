"""Run configuration: a TOML document with four tables plus two top-level keys.

::

    mode = "run"                  # run | diagnose | regularize | converge
    output_dir = "out"

    [geometry]
    kind = "disk"                 # disk | fourier
    radius = 1.0                  # disk only
    coefficients = [[1.0, 0.0], [0.0, 0.0], [0.2, 0.0]]   # fourier: (a_k, b_k), k = 0, 1, ...
    n_panels = 128
    mass = 1.0
    inertia = 0.5
    closed_form = true            # disk only: analytic fields and added mass
    check_density = false         # require inertia to match a uniform density

    [initial]
    preset = "gaussian-patch"     # gaussian-patch | uniform-patch | vortex-pair
    center = [2.5, 0.0]
    radius = 0.5
    amplitude = 1.0
    grid_spacing = 0.05
    p = 2.0
    gamma = 0.0
    ell0 = [0.0, 0.0]
    r0 = 0.0
    mollify = 0                   # level n used by run; 0 samples the raw preset

    [numerics]
    dt = 1e-3
    T = 1.0
    delta = 0.1
    snapshot_interval = 0.1
    energy_radius = 0.0           # R_E; 0 means 8 x vorticity support radius
    quadrature_radius = 0.0       # R of the volume-force cross-check; 0 means 8 x support
    cfl = 0.5
    frozen_body = false

    [diagnostics]
    weak_convention = "rho-weighted"   # rho-weighted | fluid
    weak_residuals = true
    bin_spacing = 0.0             # 0 means the blob radius delta

    [mollification]
    levels = [4, 8, 16, 32]
    probe_center = [0.0, 0.0]     # local grid for velocity differences
    probe_half_width = 3.0
    probe_points = 41
"""

import math
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, InvalidArgument
from .geometry import make_disk, make_fourier_body

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("run", "diagnose", "regularize", "converge")
PRESETS = ("gaussian-patch", "uniform-patch", "vortex-pair")


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = "disk"
    radius: float = 1.0
    coefficients: tuple = ()
    n_panels: int = 128
    mass: float = 1.0
    inertia: float = 0.5
    closed_form: bool = True
    check_density: bool = False


@dataclass(frozen=True)
class InitialConfig:
    preset: str = "gaussian-patch"
    center: tuple = (2.5, 0.0)
    radius: float = 0.5
    amplitude: float = 1.0
    grid_spacing: float = 0.05
    p: float = 2.0
    gamma: float = 0.0
    ell0: tuple = (0.0, 0.0)
    r0: float = 0.0
    mollify: int = 0


@dataclass(frozen=True)
class NumericsConfig:
    dt: float = 1e-3
    T: float = 1.0
    delta: float = 0.1
    snapshot_interval: float = 0.1
    energy_radius: float = 0.0
    quadrature_radius: float = 0.0
    cfl: float = 0.5
    frozen_body: bool = False


@dataclass(frozen=True)
class DiagnosticsConfig:
    weak_convention: str = "rho-weighted"
    weak_residuals: bool = True
    bin_spacing: float = 0.0


@dataclass(frozen=True)
class MollificationConfig:
    levels: tuple = (4, 8, 16, 32)
    probe_center: tuple = (0.0, 0.0)
    probe_half_width: float = 3.0
    probe_points: int = 41


@dataclass(frozen=True)
class SimConfig:
    mode: str = "run"
    output_dir: str = "out"
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    mollification: MollificationConfig = field(default_factory=MollificationConfig)

    def to_dict(self):
        def conv(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: conv(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return [conv(v) for v in obj]
            return obj
        return conv(self)

    def build_geometry(self):
        g = self.geometry
        if g.kind == "disk":
            return make_disk(g.radius, g.n_panels, g.mass, g.inertia)
        return make_fourier_body(g.coefficients, g.n_panels, g.mass, g.inertia)

    def with_overrides(self, **sections):
        """Copy with some fields of the named sections replaced."""
        out = self
        for name, changes in sections.items():
            out = replace(out, **{name: replace(getattr(out, name), **changes)})
        return out


_SECTIONS = {
    "geometry": GeometryConfig,
    "initial": InitialConfig,
    "numerics": NumericsConfig,
    "diagnostics": DiagnosticsConfig,
    "mollification": MollificationConfig,
}


def _coerce(path, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false", path)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer", path)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number", path)
        if not math.isfinite(value):
            raise ConfigError(f"{path} must be finite", path)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string", path)
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be an array", path)
        out = []
        for i, item in enumerate(value):
            if isinstance(item, list):
                if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item):
                    raise ConfigError(f"{path}[{i}] must hold numbers", path)
                out.append(tuple(float(v) for v in item))
            elif isinstance(item, (int, float)) and not isinstance(item, bool):
                out.append(item)
            else:
                raise ConfigError(f"{path}[{i}] has an invalid entry", path)
        return tuple(out)
    raise ConfigError(f"{path}: unsupported value", path)


def _section(name, cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table", name)
    defaults = cls()
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}", f"{name}.{key}")
        kwargs[key] = _coerce(f"{name}.{key}", getattr(defaults, key), value)
    return cls(**kwargs)


def _require(cond, path, message):
    if not cond:
        raise ConfigError(f"{path}: {message}", path)


def _patch_disks(init):
    """(center, radius) of the disks holding the initial vorticity."""
    c = np.asarray(init.center, dtype=float)
    if init.preset == "vortex-pair":
        off = np.array([0.0, 1.25 * init.radius])
        return [(c + off, init.radius), (c - off, init.radius)]
    return [(c, init.radius)]


def support_overlaps_body(geometry, init):
    phi = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    curve = geometry.curve(phi)
    for c, rad in _patch_disks(init):
        if geometry.contains(c) or np.min(np.hypot(*(curve - c).T)) <= rad:
            return True
    return False


def validate(cfg):
    _require(cfg.mode in MODES, "mode", f"must be one of {', '.join(MODES)}")
    g = cfg.geometry
    _require(g.kind in ("disk", "fourier"), "geometry.kind", "must be disk or fourier")
    _require(g.n_panels >= 8, "geometry.n_panels", "n_panels >= 8 is required")
    _require(g.mass > 0, "geometry.mass", "mass > 0 is required")
    _require(g.inertia > 0, "geometry.inertia", "inertia > 0 is required")
    if g.kind == "disk":
        _require(g.radius > 0, "geometry.radius", "radius > 0 is required")
    else:
        _require(len(g.coefficients) >= 1, "geometry.coefficients", "at least the mean radius is required")
        _require(all(isinstance(c, tuple) and len(c) == 2 for c in g.coefficients),
                 "geometry.coefficients", "entries must be [cos, sin] pairs")
    i = cfg.initial
    _require(i.preset in PRESETS, "initial.preset", f"must be one of {', '.join(PRESETS)}")
    _require(len(i.center) == 2, "initial.center", "must have two entries")
    _require(len(i.ell0) == 2, "initial.ell0", "must have two entries")
    _require(i.radius > 0, "initial.radius", "radius > 0 is required")
    _require(i.grid_spacing > 0, "initial.grid_spacing", "grid_spacing > 0 is required")
    _require(i.p > 1, "initial.p", "p > 1 is required")
    _require(i.mollify >= 0, "initial.mollify", "must be >= 0")
    n = cfg.numerics
    _require(n.dt > 0, "numerics.dt", "dt > 0 is required")
    _require(n.T > 0, "numerics.T", "T > 0 is required")
    _require(n.delta > 0, "numerics.delta", "delta > 0 is required")
    _require(n.snapshot_interval > 0, "numerics.snapshot_interval", "must be positive")
    _require(n.snapshot_interval >= n.dt, "numerics.snapshot_interval", "must be at least dt")
    _require(n.energy_radius >= 0, "numerics.energy_radius", "must be >= 0")
    _require(n.quadrature_radius >= 0, "numerics.quadrature_radius", "must be >= 0")
    _require(n.cfl > 0, "numerics.cfl", "must be positive")
    d = cfg.diagnostics
    _require(d.weak_convention in ("rho-weighted", "fluid"), "diagnostics.weak_convention",
             "must be rho-weighted or fluid")
    _require(d.bin_spacing >= 0, "diagnostics.bin_spacing", "must be >= 0")
    m = cfg.mollification
    _require(all(isinstance(v, int) and v >= 1 for v in m.levels), "mollification.levels",
             "levels must be positive integers")
    _require(len(m.probe_center) == 2, "mollification.probe_center", "must have two entries")
    _require(m.probe_half_width > 0, "mollification.probe_half_width", "must be positive")
    _require(m.probe_points >= 2, "mollification.probe_points", "must be at least 2")
    if cfg.mode == "converge":
        _require(len(m.levels) >= 2, "mollification.levels", "converge needs at least two levels")

    geometry = cfg.build_geometry()
    if g.check_density:
        expected = geometry.uniform_density_inertia()
        _require(abs(expected - g.inertia) <= 1e-6 * expected, "geometry.inertia",
                 f"does not match the uniform-density value {expected:.6g}")
    if support_overlaps_body(geometry, i):
        raise InvalidArgument("the initial vorticity support meets the closed body")
    return cfg


def parse_config(text):
    """Parse and validate a TOML configuration document."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    kwargs = {}
    for key, value in data.items():
        if key in ("mode", "output_dir"):
            if not isinstance(value, str):
                raise ConfigError(f"{key} must be a string", key)
            kwargs[key] = value
        elif key in _SECTIONS:
            kwargs[key] = _section(key, _SECTIONS[key], value)
        else:
            raise ConfigError(f"unknown key {key}", key)
    if "geometry" in kwargs and kwargs["geometry"].kind == "fourier" and not kwargs["geometry"].coefficients:
        raise ConfigError("geometry.coefficients is required for a fourier body", "geometry.coefficients")
    return validate(SimConfig(**kwargs))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
