"""Run configuration files.

Runs are described by INI files with a fixed schema; unknown sections or
keys are rejected so typos fail loudly instead of silently falling back
to defaults. Parsing stops at the first offending field and names it.

Sections::

    [surface]   kind plus kind-specific shape parameters
    [grid]      h, bounding box, tangent basis choice
    [image]     initial image: synthetic pattern, texture file, mesh colors
    [noise]     optional corruption of the initial image
    [filter]    filter kind, times and contrast parameters
    [output]    file paths for band dump, point clouds, diagnostics
    [run]       execution knobs (threads)

Filter times may be given either in surface units (sigma, rho, stop_time)
or in pixel units (sigma_px, rho_px, stop_time_px together with
length_scale), which are converted via the standard Gaussian-to-heat-time
correspondence.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .filters import FilterConfig, pixel_to_surface_parameters
from .geometry import (
    PlanePatch,
    Sphere,
    SurfaceOfRevolution,
    Torus,
    vase_profile,
)
from .mesh import load_mesh

_SCHEMA = {
    "surface": {
        "kind", "radius", "center", "major_radius", "minor_radius",
        "half_extent", "z0", "profile", "path",
    },
    "grid": {"h", "box_min", "box_max", "tangent_basis"},
    "image": {
        "source", "pattern", "texture", "size", "count", "rings", "warp",
        "axis", "gap_density", "gap_cells", "waviness", "wave_cells",
        "profile", "cross", "cross_count", "low", "high", "seed",
    },
    "noise": {"model", "fraction", "std", "palette", "seed", "low", "high"},
    "filter": {
        "kind", "stop_time", "sigma", "rho", "lambda_rel", "alpha", "b_rel",
        "tau_factor", "g_refresh", "sigma_px", "rho_px", "stop_time_px",
        "length_scale",
    },
    "output": {"band", "ply", "ply_input", "diagnostics", "mesh_ply"},
    "run": {"threads"},
}


@dataclass
class ImageSpec:
    source: str = "pattern"
    pattern: str = "stripes"
    texture: str = ""
    size: tuple = (512, 512)
    count: float = 8
    rings: int = 6
    warp: float = 0.35
    axis: int = 0
    gap_density: float = 0.45
    gap_cells: int = 6
    waviness: float = 0.0
    wave_cells: int = 24
    profile: str = "sine"
    cross: float = 0.0
    cross_count: float = 0.0
    low: float = 0.15
    high: float = 0.85
    seed: int = 0


@dataclass
class NoiseSpec:
    model: str = "none"
    fraction: float = 0.0
    std: float = 0.0
    palette: np.ndarray | None = None
    seed: int = 0
    low: float = 0.0
    high: float = 1.0


@dataclass
class RunConfig:
    surface: object
    h: float
    box: tuple
    tangent_basis: str
    image: ImageSpec
    noise: NoiseSpec
    filter: FilterConfig | None
    outputs: dict = field(default_factory=dict)
    threads: int = 0


class _Section:
    """Typed access to one INI section with field-naming errors."""

    def __init__(self, name, mapping):
        self.name = name
        self.map = dict(mapping)

    def has(self, key):
        return key in self.map

    def _raw(self, key, default):
        if key not in self.map:
            if default is _REQUIRED:
                raise ConfigError(f"missing required field {self.name}.{key}")
            return None
        return self.map[key]

    def str(self, key, default=None, choices=None):
        raw = self._raw(key, default)
        val = default if raw is None else raw.strip()
        if choices and val not in choices:
            raise ConfigError(
                f"{self.name}.{key} must be one of {sorted(choices)}, got {val!r}"
            )
        return val

    def float(self, key, default=None, positive=False, non_negative=False):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key} must be a number, got {raw!r}")
        if positive and not val > 0:
            raise ConfigError(f"{self.name}.{key} must be positive, got {val!r}")
        if non_negative and val < 0:
            raise ConfigError(f"{self.name}.{key} must be non-negative, got {val!r}")
        return val

    def int(self, key, default=None, non_negative=False):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            val = int(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key} must be an integer, got {raw!r}")
        if non_negative and val < 0:
            raise ConfigError(f"{self.name}.{key} must be non-negative, got {val!r}")
        return val

    def floats(self, key, default=None, n=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            vals = tuple(float(t) for t in raw.split())
        except ValueError:
            raise ConfigError(f"{self.name}.{key} must be numbers, got {raw!r}")
        if n is not None and len(vals) != n:
            raise ConfigError(f"{self.name}.{key} needs {n} numbers, got {len(vals)}")
        return vals


_REQUIRED = object()


def _load_ini(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}")
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    sections = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown config section [{name}]")
        for key in parser[name]:
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown field {name}.{key}")
        sections[name] = _Section(name, parser[name])
    for name in _SCHEMA:
        sections.setdefault(name, _Section(name, {}))
    return sections


def _build_surface(sec):
    kind = sec.str("kind", _REQUIRED,
                   choices={"sphere", "torus", "plane_patch", "revolution", "mesh"})
    if kind == "sphere":
        return Sphere(radius=sec.float("radius", 1.0, positive=True),
                      center=sec.floats("center", (0.0, 0.0, 0.0), n=3))
    if kind == "torus":
        return Torus(major_radius=sec.float("major_radius", 1.0, positive=True),
                     minor_radius=sec.float("minor_radius", 0.4, positive=True),
                     center=sec.floats("center", (0.0, 0.0, 0.0), n=3))
    if kind == "plane_patch":
        return PlanePatch(half_extent=sec.float("half_extent", 1.0, positive=True),
                          z0=sec.float("z0", 0.0))
    if kind == "revolution":
        prof = sec.str("profile", _REQUIRED)
        if prof == "vase":
            return SurfaceOfRevolution(vase_profile())
        try:
            data = np.loadtxt(prof, delimiter=",", dtype=np.float64)
        except OSError:
            raise ConfigError(f"surface.profile file not found: {prof}")
        return SurfaceOfRevolution(data)
    path = sec.str("path", _REQUIRED)
    try:
        return load_mesh(path)
    except OSError:
        raise ConfigError(f"surface.path file not found: {path}")


def _build_image(sec):
    spec = ImageSpec()
    spec.source = sec.str("source", "pattern",
                          choices={"pattern", "texture", "mesh_colors"})
    spec.pattern = sec.str(
        "pattern", "stripes",
        choices={"stripes", "checkerboard", "wood", "interrupted_stripes"},
    )
    spec.texture = sec.str("texture", "")
    if spec.source == "texture" and not spec.texture:
        raise ConfigError("image.texture is required when image.source = texture")
    size = sec.floats("size", (512.0, 512.0), n=2)
    spec.size = (int(size[0]), int(size[1]))
    spec.count = sec.float("count", 8.0, positive=True)
    spec.rings = sec.int("rings", 6)
    spec.warp = sec.float("warp", 0.35)
    spec.axis = sec.int("axis", 0)
    spec.gap_density = sec.float("gap_density", 0.45, non_negative=True)
    spec.gap_cells = sec.int("gap_cells", 6, non_negative=True)
    spec.waviness = sec.float("waviness", 0.0, non_negative=True)
    spec.wave_cells = sec.int("wave_cells", 24, non_negative=True)
    spec.profile = sec.str("profile", "sine", choices={"sine", "ridge"})
    spec.cross = sec.float("cross", 0.0, non_negative=True)
    spec.cross_count = sec.float("cross_count", 0.0, non_negative=True)
    spec.low = sec.float("low", 0.15)
    spec.high = sec.float("high", 0.85)
    spec.seed = sec.int("seed", 0)
    return spec


def _build_noise(sec):
    spec = NoiseSpec()
    spec.model = sec.str("model", "none",
                         choices={"none", "gaussian", "salt_pepper", "replacement"})
    spec.fraction = sec.float("fraction", 0.0, non_negative=True)
    if spec.fraction > 1.0:
        raise ConfigError("noise.fraction must not exceed 1")
    spec.std = sec.float("std", 0.0, non_negative=True)
    spec.seed = sec.int("seed", 0)
    spec.low = sec.float("low", 0.0)
    spec.high = sec.float("high", 1.0)
    if sec.has("palette"):
        groups = sec.str("palette", "").split()
        try:
            rows = [tuple(float(t) for t in g.split(",")) for g in groups]
        except ValueError:
            raise ConfigError("noise.palette must be numbers, e.g. '0.2 0.8'")
        width = {len(r) for r in rows}
        if width == {1}:
            spec.palette = np.array([r[0] for r in rows])
        elif width == {3}:
            spec.palette = np.array(rows)
        else:
            raise ConfigError("noise.palette entries must all be scalars or r,g,b triples")
    if spec.model == "replacement" and spec.palette is None:
        raise ConfigError("noise.palette is required for replacement noise")
    return spec


def _build_filter(sec):
    if not sec.map:
        return None
    kind = sec.str("kind", _REQUIRED,
                   choices={"gaussian", "perona_malik", "edge", "coherence"})
    length_scale = sec.float("length_scale", 0.0)
    px_keys = [k for k in ("sigma_px", "rho_px", "stop_time_px") if sec.has(k)]
    if px_keys and length_scale <= 0:
        raise ConfigError("filter.length_scale must be positive with *_px fields")
    sigma_px, rho_px, stop_px = (
        sec.float("sigma_px", 0.0, non_negative=True),
        sec.float("rho_px", 0.0, non_negative=True),
        sec.float("stop_time_px", 0.0, non_negative=True),
    )
    sigma_c, rho_c, stop_c = (0.0, 0.0, 0.0)
    if px_keys:
        sigma_c, rho_c, stop_c = pixel_to_surface_parameters(
            sigma_px, rho_px, stop_px, length_scale
        )
    for name, px in (("sigma", "sigma_px"), ("rho", "rho_px"),
                     ("stop_time", "stop_time_px")):
        if sec.has(name) and sec.has(px):
            raise ConfigError(f"give filter.{name} or filter.{px}, not both")
    stop_time = sec.float("stop_time", None, non_negative=True)
    if stop_time is None:
        if not sec.has("stop_time_px"):
            raise ConfigError("missing required field filter.stop_time")
        stop_time = stop_c
    return FilterConfig(
        kind=kind,
        stop_time=stop_time,
        sigma=sec.float("sigma", sigma_c if sec.has("sigma_px") else 0.0,
                        non_negative=True),
        rho=sec.float("rho", rho_c if sec.has("rho_px") else 0.0,
                      non_negative=True),
        lambda_rel=sec.float("lambda_rel", 0.0, non_negative=True),
        alpha=sec.float("alpha", 1e-3),
        b_rel=sec.float("b_rel", 0.0, non_negative=True),
        tau_factor=sec.float("tau_factor", 0.15, positive=True),
        g_refresh=sec.int("g_refresh", 1),
    )


def load_config(path):
    """Parse and validate a run configuration file."""
    sections = _load_ini(path)
    surface = _build_surface(sections["surface"])
    grid = sections["grid"]
    h = grid.float("h", _REQUIRED, positive=True)
    box_min = grid.floats("box_min", (-1.5, -1.5, -1.5), n=3)
    box_max = grid.floats("box_max", (1.5, 1.5, 1.5), n=3)
    if any(a >= b for a, b in zip(box_min, box_max)):
        raise ConfigError("grid.box_min must be below grid.box_max componentwise")
    basis = grid.str("tangent_basis", "householder",
                     choices={"householder", "cp_jacobian"})
    image = _build_image(sections["image"])
    if image.source == "mesh_colors" and surface.kind != "mesh":
        raise ConfigError("image.source = mesh_colors needs a mesh surface")
    noise = _build_noise(sections["noise"])
    filt = _build_filter(sections["filter"])
    out_sec = sections["output"]
    outputs = {k: out_sec.str(k, "") for k in _SCHEMA["output"] if out_sec.has(k)}
    threads = sections["run"].int("threads", 0, non_negative=True)
    return RunConfig(
        surface=surface, h=h, box=(box_min, box_max), tangent_basis=basis,
        image=image, noise=noise, filter=filt, outputs=outputs, threads=threads,
    )
