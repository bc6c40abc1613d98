"""Shared geometric and radiometric value types.

Every type here is an immutable value: dataclasses are frozen and any numpy
payload is copied and flagged read-only at construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoints, InvalidNeighborhood, ValidationError

UNIT_TOL = 1e-9


def _frozen_array(values, dtype=np.float64):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValidationError("Point3", f"non-finite component in {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Point3":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Direction:
    """Unit 3-vector."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(n - 1.0) <= UNIT_TOL:
            raise ValidationError("Direction", f"norm {n!r} is not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Direction":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def normalized(cls, x, y, z) -> "Direction":
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValidationError("Direction", "zero vector")
        return cls(x / n, y / n, z / n)

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)

    def dot(self, other) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z


@dataclass(frozen=True)
class SurfaceNormal:
    """Unnormalized height-field normal ``(dz/dx, dz/dy, -1)``.

    The -1 component is fixed; only the two slopes are free.
    """

    nx: float
    ny: float
    nz: float = -1.0

    def __post_init__(self):
        if self.nz != -1.0:
            raise ValidationError("SurfaceNormal.nz", "must be exactly -1")

    @classmethod
    def from_slopes(cls, dzdx: float, dzdy: float) -> "SurfaceNormal":
        return cls(float(dzdx), float(dzdy))

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz], dtype=np.float64)

    def dot(self, d) -> float:
        return self.nx * d.x + self.ny * d.y + self.nz * d.z


@dataclass(frozen=True)
class LightFieldVector:
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values).reshape(-1)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValidationError("LightFieldVector", "values must be finite and >= 0")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def basis(cls, n: int, index: int) -> "LightFieldVector":
        v = np.zeros(n)
        v[index] = 1.0
        return cls(v)


class Device(enum.Enum):
    CAMERA = "camera"
    PROJECTOR = "projector"


@dataclass(frozen=True)
class PixelIndex:
    u: int
    v: int
    device: Device

    def check(self, width: int, height: int) -> "PixelIndex":
        if not (0 <= self.u < width and 0 <= self.v < height):
            raise ValidationError("PixelIndex", f"({self.u}, {self.v}) outside {width}x{height}")
        return self

    def linear(self, width: int) -> int:
        return self.v * width + self.u


@dataclass(frozen=True)
class HeightField:
    """Depth ``z(x, y)`` sampled on a regular grid.

    ``z`` and ``valid`` are stored as ``(height, width)`` arrays, row index
    along y. Sample ``(row, col)`` sits at ``(x0 + col*dx, y0 + row*dy)``.
    """

    width: int
    height: int
    dx: float
    dy: float
    z: np.ndarray
    valid: np.ndarray = None
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("HeightField", "grid dimensions must be positive")
        if not (self.dx > 0 and self.dy > 0):
            raise ValidationError("HeightField", "grid spacing must be positive")
        z = np.array(self.z, dtype=np.float64, copy=True)
        if z.size != self.width * self.height:
            raise ValidationError(
                "HeightField", f"{z.size} depths for a {self.width}x{self.height} grid"
            )
        z = z.reshape(self.height, self.width)
        if self.valid is None:
            valid = np.isfinite(z)
        else:
            valid = np.array(self.valid, dtype=bool, copy=True)
            if valid.size != z.size:
                raise ValidationError("HeightField", "mask size differs from depth size")
            valid = valid.reshape(self.height, self.width)
        if not np.all(np.isfinite(z[valid])):
            raise ValidationError("HeightField", "non-finite depth under a valid cell")
        z.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "valid", valid)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.width)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.height)

    def with_z(self, z, valid=None) -> "HeightField":
        return HeightField(self.width, self.height, self.dx, self.dy, z, valid, self.x0, self.y0)


def direction_between(start: Point3, end: Point3) -> Direction:
    """Unit vector pointing from ``start`` to ``end``."""
    dx, dy, dz = end.x - start.x, end.y - start.y, end.z - start.z
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n < 1e-12:
        raise CoincidentPoints(f"{start} and {end} coincide")
    return Direction(dx / n, dy / n, dz / n)


def heightfield_gradient(h: HeightField, cell) -> tuple[float, float]:
    """``(dz/dx, dz/dy)`` at ``cell = (col, row)`` by finite differences.

    Central differences in the interior, one-sided at the grid border.
    A single-sample axis has zero slope along it.
    """
    col, row = cell
    if not (0 <= col < h.width and 0 <= row < h.height):
        raise InvalidNeighborhood(f"cell {cell} outside {h.width}x{h.height}")
    if not h.valid[row, col]:
        raise InvalidNeighborhood(f"cell {cell} is masked")

    def diff(n, i, sample, spacing):
        if n == 1:
            return 0.0
        lo, hi = (i - 1, i + 1) if 0 < i < n - 1 else ((i, i + 1) if i == 0 else (i - 1, i))
        for k in (lo, hi):
            if not sample(k)[1]:
                raise InvalidNeighborhood(f"neighbor {k} of cell {cell} is masked")
        return (sample(hi)[0] - sample(lo)[0]) / ((hi - lo) * spacing)

    gx = diff(h.width, col, lambda k: (h.z[row, k], h.valid[row, k]), h.dx)
    gy = diff(h.height, row, lambda k: (h.z[k, col], h.valid[k, col]), h.dy)
    return gx, gy
