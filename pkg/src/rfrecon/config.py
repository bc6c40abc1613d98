"""Text configuration for scenes, rigs and reconstruction parameters.

Files are UTF-8 with ``[section]`` headers, ``key = value`` lines and ``#``
comments. Keys are unique within a section and unknown keys are errors.

Scene files::

    [grid]          width, height (required); dx = 1, dy = dx, x0 = 0, y0 = 0,
                    scale = 1 (multiplies every surface height)
    [surface]       type = plane | cube | ruled_sine | pfm
                      plane:      offset; slope_x = 0, slope_y = 0
                      cube:       size, offset; center_x, center_y = grid center,
                                  angle = 0
                      ruled_sine: amplitude, period, offset
                      pfm:        path (relative to the scene file)
    [brdf]          model = lambertian (albedo)
                          | blinn_phong (diffuse, specular, exponent)
                          | ward (diffuse, specular, alpha_x, alpha_y)
    [frame]         tangent_angle = 0 (optional section)

Rig files have ``[camera]`` and ``[projector]`` sections with width, height,
fx, fy, cx, cy, rotation (9 values, row-major, default identity) and
translation (3 values, default zero). Parameter files have one
``[reconstruct]`` section mirroring ``ReconstructionParams``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .brdf import BlinnPhong, Lambertian, WardAnisotropic
from .errors import ParseError, ValidationError
from .geometry import PinholeDevice, Rig
from .io import read_pfm
from .reconstruct import ReconstructionParams, SeedStrategy
from .scene import Scene, cube_surface, plane_surface, ruled_sine_surface
from .types import HeightField


@dataclass(frozen=True)
class Entry:
    value: str
    line: int
    column: int  # 1-based column of the value
    key_column: int


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_sections(text: str):
    """``({section: {key: Entry}}, {section: header line})`` with duplicate and syntax checks."""
    sections: dict = {}
    section_lines: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError(lineno, indent + len(stripped) + 1, "expected ']' to close section header")
            name = stripped[1:-1].strip()
            if not name:
                raise ParseError(lineno, indent + 2, "empty section name")
            if name in sections:
                raise ParseError(lineno, indent + 1,
                                 f"section [{name}] already defined on line {section_lines[name]}")
            sections[name] = {}
            section_lines[name] = lineno
            current = name
            continue
        eq = line.find("=")
        if eq < 0:
            raise ParseError(lineno, indent + 1, "expected 'key = value'")
        key = line[:eq].strip()
        if not key:
            raise ParseError(lineno, indent + 1, "missing key before '='")
        if current is None:
            raise ParseError(lineno, indent + 1, f"key '{key}' appears before any [section]")
        value_part = line[eq + 1 :]
        value = value_part.strip()
        vcol = eq + 2 + (len(value_part) - len(value_part.lstrip()))
        if not value:
            raise ParseError(lineno, eq + 2, f"missing value for '{key}'")
        if key in sections[current]:
            first = sections[current][key].line
            raise ParseError(lineno, indent + 1, f"duplicate key '{key}' (first on line {first}, again on line {lineno})")
        sections[current][key] = Entry(value, lineno, vcol, indent + 1)
    return sections, section_lines


class _Section:
    """Typed accessors that remember which keys were consumed."""

    def __init__(self, name, entries):
        self.name = name
        self.entries = entries or {}
        self.used = set()

    def has(self, key):
        return key in self.entries

    def _entry(self, key):
        self.used.add(key)
        return self.entries[key]

    def _missing(self, key):
        raise ValidationError(f"{self.name}.{key}", "is required")

    def str(self, key, default=None):
        if key not in self.entries:
            return self._missing(key) if default is None else default
        return self._entry(key).value

    def float(self, key, default=None):
        if key not in self.entries:
            return self._missing(key) if default is None else float(default)
        e = self._entry(key)
        try:
            x = float(e.value)
        except ValueError:
            raise ParseError(e.line, e.column, f"'{key}' expects a number, got {e.value!r}") from None
        if not math.isfinite(x):
            raise ValidationError(key, "must be finite")
        return x

    def int(self, key, default=None):
        if key not in self.entries:
            return self._missing(key) if default is None else int(default)
        e = self._entry(key)
        try:
            return int(e.value)
        except ValueError:
            raise ParseError(e.line, e.column, f"'{key}' expects an integer, got {e.value!r}") from None

    def floats(self, key, n, default):
        if key not in self.entries:
            return np.array(default, dtype=np.float64)
        e = self._entry(key)
        parts = e.value.replace(",", " ").split()
        if len(parts) != n:
            raise ParseError(e.line, e.column, f"'{key}' expects {n} numbers, got {len(parts)}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            raise ParseError(e.line, e.column, f"'{key}' expects numbers, got {e.value!r}") from None

    def finish(self):
        for key, e in self.entries.items():
            if key not in self.used:
                raise ParseError(e.line, e.key_column, f"unknown key '{key}' in [{self.name}]")


def _sections(text, allowed, required):
    raw, header_lines = parse_sections(text)
    for name in raw:
        if name not in allowed:
            raise ParseError(header_lines[name], 1, f"unknown section [{name}]")
    for name in required:
        if name not in raw:
            raise ValidationError(name, "section is required")
    return {name: _Section(name, raw.get(name)) for name in allowed}


def _positive(key, x):
    if not x > 0:
        raise ValidationError(key, f"{x!r} must be positive")
    return x


@dataclass(frozen=True)
class SceneConfig:
    width: int
    height: int
    dx: float
    dy: float
    x0: float
    y0: float
    scale: float
    surface: dict
    brdf: object
    tangent_angle: float = 0.0
    base_dir: str = field(default=".", compare=False)

    def heightfield(self) -> HeightField:
        s = dict(self.surface)
        kind = s.pop("type")
        grid = (self.width, self.height, self.dx, self.dy)
        if kind == "plane":
            hf = plane_surface(*grid, s["slope_x"], s["slope_y"], s["offset"], self.x0, self.y0)
        elif kind == "ruled_sine":
            hf = ruled_sine_surface(*grid, s["amplitude"], s["period"], s["offset"], self.x0, self.y0)
        elif kind == "cube":
            hf = cube_surface(*grid, s["size"], s["center_x"], s["center_y"], s["angle"], s["offset"],
                              self.x0, self.y0)
        else:
            z = read_pfm(os.path.join(self.base_dir, s["path"])).astype(np.float64)
            if z.shape != (self.height, self.width):
                raise ValidationError("surface.path", f"PFM is {z.shape[1]}x{z.shape[0]}, grid is "
                                                      f"{self.width}x{self.height}")
            hf = HeightField(self.width, self.height, self.dx, self.dy, z, None, self.x0, self.y0)
        if self.scale != 1.0:
            hf = hf.with_z(np.where(hf.valid, hf.z * self.scale, np.nan), hf.valid)
        return hf

    def build(self) -> Scene:
        return Scene(self.heightfield(), self.brdf, self.tangent_angle)


def parse_scene(text: str, base_dir: str = ".") -> SceneConfig:
    sec = _sections(text, ("grid", "surface", "brdf", "frame"), ("grid", "surface", "brdf"))
    g = sec["grid"]
    width = g.int("width")
    height = g.int("height")
    if width < 2 or height < 2:
        raise ValidationError("width/height", "grid needs at least 2x2 samples")
    dx = _positive("dx", g.float("dx", 1.0))
    dy = _positive("dy", g.float("dy", dx))
    x0, y0 = g.float("x0", 0.0), g.float("y0", 0.0)
    scale = _positive("scale", g.float("scale", 1.0))
    g.finish()

    s = sec["surface"]
    kind = s.str("type")
    if kind == "plane":
        surface = {"slope_x": s.float("slope_x", 0.0), "slope_y": s.float("slope_y", 0.0),
                   "offset": s.float("offset")}
    elif kind == "cube":
        surface = {"size": _positive("size", s.float("size")), "offset": s.float("offset"),
                   "center_x": s.float("center_x", x0 + dx * (width - 1) / 2),
                   "center_y": s.float("center_y", y0 + dy * (height - 1) / 2),
                   "angle": s.float("angle", 0.0)}
    elif kind == "ruled_sine":
        surface = {"amplitude": s.float("amplitude"), "period": _positive("period", s.float("period")),
                   "offset": s.float("offset")}
    elif kind == "pfm":
        surface = {"path": s.str("path")}
    else:
        e = s.entries["type"]
        raise ValidationError("type", f"unknown surface type {kind!r} (line {e.line})")
    surface["type"] = kind
    s.finish()

    b = sec["brdf"]
    model = b.str("model")
    if model == "lambertian":
        brdf = Lambertian(b.float("albedo"))
    elif model == "blinn_phong":
        brdf = BlinnPhong(b.float("diffuse"), b.float("specular"), b.float("exponent"))
    elif model == "ward":
        brdf = WardAnisotropic(b.float("diffuse"), b.float("specular"), b.float("alpha_x"), b.float("alpha_y"))
    else:
        raise ValidationError("model", f"unknown BRDF model {model!r}")
    b.finish()

    f = sec["frame"]
    angle = f.float("tangent_angle", 0.0)
    f.finish()
    return SceneConfig(width, height, dx, dy, x0, y0, scale, surface, brdf, angle, base_dir)


def _device(sec: _Section) -> PinholeDevice:
    dev = PinholeDevice(
        sec.int("width"), sec.int("height"), sec.float("fx"), sec.float("fy"), sec.float("cx"), sec.float("cy"),
        sec.floats("rotation", 9, np.eye(3).ravel()).reshape(3, 3), sec.floats("translation", 3, np.zeros(3)))
    sec.finish()
    return dev


def parse_rig(text: str) -> Rig:
    sec = _sections(text, ("camera", "projector"), ("camera", "projector"))
    return Rig(_device(sec["camera"]), _device(sec["projector"]))


def _fmt(values) -> str:
    return " ".join(repr(float(x)) for x in np.ravel(values))


def write_rig(rig: Rig) -> str:
    out = []
    for name, dev in (("camera", rig.camera), ("projector", rig.projector)):
        out.append(f"[{name}]")
        out.append(f"width = {dev.width}")
        out.append(f"height = {dev.height}")
        for key in ("fx", "fy", "cx", "cy"):
            out.append(f"{key} = {float(getattr(dev, key))!r}")
        out.append(f"rotation = {_fmt(dev.rotation)}")
        out.append(f"translation = {_fmt(dev.translation)}")
        out.append("")
    return "\n".join(out)


def parse_params(text: str) -> ReconstructionParams:
    sec = _sections(text, ("reconstruct",), ())["reconstruct"]
    d = ReconstructionParams()
    strategy = sec.str("seed_strategy", d.seed_strategy.value)
    if strategy not in {s.value for s in SeedStrategy}:
        raise ValidationError("seed_strategy", f"unknown strategy {strategy!r}")
    params = ReconstructionParams(
        omega_x_epsilon=sec.float("omega_x_epsilon", d.omega_x_epsilon),
        transport_epsilon=sec.float("transport_epsilon", d.transport_epsilon),
        seed_strategy=SeedStrategy(strategy),
        subpixel_window=sec.int("subpixel_window", d.subpixel_window),
        corrector_iterations=sec.int("corrector_iterations", d.corrector_iterations),
        corrector_tol=sec.float("corrector_tol", d.corrector_tol),
        foreshortening=sec.str("foreshortening", d.foreshortening),
        profile_refinement=sec.int("profile_refinement", d.profile_refinement),
    )
    sec.finish()
    return params
