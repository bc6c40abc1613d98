"""Parametric height-field scenes with a BRDF and a tangent-frame field."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .brdf import BrdfModel
from .raycast import SurfaceGrid
from .types import HeightField


@dataclass(frozen=True)
class Scene:
    """Height field, material, and tangent orientation.

    ``tangent_angle`` orients the shading tangent: the world direction
    ``(cos a, sin a, 0)`` projected onto the local tangent plane.
    """

    surface: HeightField
    brdf: BrdfModel
    tangent_angle: float = 0.0

    @cached_property
    def grid(self) -> SurfaceGrid:
        return SurfaceGrid.from_heightfield(self.surface)

    def frames(self, zx, zy):
        """Unit normal, tangent, bitangent arrays for the given surface slopes.

        The normal is ``(dz/dx, dz/dy, -1)`` normalized, which faces devices
        looking down +z.
        """
        n = np.stack([zx, zy, -np.ones_like(zx)], axis=-1)
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        ref = np.array([math.cos(self.tangent_angle), math.sin(self.tangent_angle), 0.0])
        t = ref - np.sum(n * ref, axis=-1, keepdims=True) * n
        t /= np.linalg.norm(t, axis=-1, keepdims=True)
        b = np.cross(n, t)
        return n, t, b


def _grid(width, height, dx, dy, x0, y0):
    xs = x0 + dx * np.arange(width)
    ys = y0 + dy * np.arange(height)
    return np.meshgrid(xs, ys)


def plane_surface(width, height, dx, dy, slope_x, slope_y, offset, x0=0.0, y0=0.0) -> HeightField:
    """``z = slope_x * x + slope_y * y + offset``."""
    x, y = _grid(width, height, dx, dy, x0, y0)
    return HeightField(width, height, dx, dy, slope_x * x + slope_y * y + offset, None, x0, y0)


def ruled_sine_surface(width, height, dx, dy, amplitude, period, offset, x0=0.0, y0=0.0) -> HeightField:
    """``z = offset + amplitude * sin(2 pi x / period)``, constant along y."""
    x, _ = _grid(width, height, dx, dy, x0, y0)
    return HeightField(width, height, dx, dy, offset + amplitude * np.sin(2 * np.pi * x / period),
                       None, x0, y0)


def cube_surface(width, height, dx, dy, size, center_x, center_y, angle, offset,
                 x0=0.0, y0=0.0) -> HeightField:
    """A cube resting on a backdrop at depth ``offset``, seen from the -z side.

    The top face is ``size`` nearer to the devices than the backdrop; ``angle``
    rotates the footprint about z. Side walls span one grid cell.
    """
    x, y = _grid(width, height, dx, dy, x0, y0)
    c, s = math.cos(angle), math.sin(angle)
    lx = c * (x - center_x) + s * (y - center_y)
    ly = -s * (x - center_x) + c * (y - center_y)
    inside = (np.abs(lx) <= size / 2) & (np.abs(ly) <= size / 2)
    return HeightField(width, height, dx, dy, np.where(inside, offset - size, offset), None, x0, y0)
