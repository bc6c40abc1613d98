"""Ray casting against a bilinear height-field surface.

The traversal kernel comes from the compiled ``_kernels`` extension when it
is importable, otherwise from the pure-Python mirror. Set
``RFRECON_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _raycast_py
from .types import HeightField

if os.environ.get("RFRECON_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def kernel(backend: str | None = None):
    """Return the ``intersect_rays`` implementation for ``backend``."""
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.intersect_rays
    if backend == "python":
        return _raycast_py.intersect_rays
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class SurfaceGrid:
    """Kernel-ready arrays derived from a HeightField."""

    heights: np.ndarray
    valid_cells: np.ndarray
    x0: float
    y0: float
    dx: float
    dy: float
    zmin: float
    zmax: float

    @classmethod
    def from_heightfield(cls, hf: HeightField) -> "SurfaceGrid":
        heights = np.ascontiguousarray(np.where(hf.valid, hf.z, 0.0), dtype=np.float64)
        v = hf.valid
        cells = v[:-1, :-1] & v[1:, :-1] & v[:-1, 1:] & v[1:, 1:]
        if np.any(v):
            zmin, zmax = float(hf.z[v].min()), float(hf.z[v].max())
        else:
            zmin, zmax = 0.0, -1.0  # empty slab: every ray misses
        pad = 1e-9 * max(1.0, abs(zmin), abs(zmax))
        return cls(heights, np.ascontiguousarray(cells, dtype=np.uint8),
                   hf.x0, hf.y0, hf.dx, hf.dy, zmin - pad, zmax + pad)

    def intersect(self, origins, dirs, tmin=0.0, tmax=np.inf, backend=None):
        origins = np.ascontiguousarray(np.broadcast_to(origins, np.shape(dirs)), dtype=np.float64)
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        n = dirs.shape[0]
        tmin = np.ascontiguousarray(np.broadcast_to(tmin, (n,)), dtype=np.float64)
        tmax = np.ascontiguousarray(np.broadcast_to(tmax, (n,)), dtype=np.float64)
        if self.valid_cells.size == 0 or not self.valid_cells.any():
            return np.full(n, np.inf), np.full(n, -1, np.int64), np.full(n, -1, np.int64)
        return kernel(backend)(self.heights, self.valid_cells, self.x0, self.y0, self.dx, self.dy,
                               self.zmin, self.zmax, origins, dirs, tmin, tmax)

    def slopes(self, points, cell_c, cell_r):
        """Analytic ``(dz/dx, dz/dy)`` of the bilinear patch containing each point."""
        h = self.heights
        z00 = h[cell_r, cell_c]
        z10 = h[cell_r, cell_c + 1]
        z01 = h[cell_r + 1, cell_c]
        z11 = h[cell_r + 1, cell_c + 1]
        s = (points[:, 0] - (self.x0 + cell_c * self.dx)) / self.dx
        r = (points[:, 1] - (self.y0 + cell_r * self.dy)) / self.dy
        e3 = z00 - z10 - z01 + z11
        zx = ((z10 - z00) + e3 * r) / self.dx
        zy = ((z01 - z00) + e3 * s) / self.dy
        return zx, zy
