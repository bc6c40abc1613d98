"""Pinhole devices, camera-projector rigs, rectification and triangulation.

The projector is modeled as an inverse camera, so both devices share the
same ``PinholeDevice`` type. Pixel ``(u, v)`` has its center at integer
coordinates; ``rotation`` maps world vectors into the device frame and
``translation`` is the world origin expressed in that frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindDevice, NonpositiveDepth, ParallelRays, ValidationError, ZeroBaseline
from .types import Point3

ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class PinholeDevice:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("width/height", "must be positive")
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError("fx/fy", "focal lengths must be positive")
        r = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if np.max(np.abs(r @ r.T - np.eye(3))) > ORTHO_TOL or abs(np.linalg.det(r) - 1.0) > ORTHO_TOL:
            raise ValidationError("rotation", "must be orthonormal with determinant +1")
        if not np.all(np.isfinite(t)):
            raise ValidationError("translation", "must be finite")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def __eq__(self, other):
        if not isinstance(other, PinholeDevice):
            return NotImplemented
        return (
            (self.width, self.height, self.fx, self.fy, self.cx, self.cy)
            == (other.width, other.height, other.fx, other.fy, other.cx, other.cy)
            and np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    __hash__ = None

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    def to_device(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def project_many(self, points):
        """Pixel coordinates and device-frame depth for an ``(N, 3)`` array."""
        pc = self.to_device(points)
        z = pc[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * pc[..., 0] / z + self.cx
            v = self.fy * pc[..., 1] / z + self.cy
        return u, v, z

    def rays(self, u, v) -> np.ndarray:
        """World-frame ray directions through pixel coordinates, scaled so that
        the device-frame depth advances by 1 per unit ray parameter."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        local = np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1)
        return local @ self.rotation

    def pixel_grid(self):
        """``(u, v)`` integer pixel-center coordinates in row-major order."""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return u.reshape(-1).astype(np.float64), v.reshape(-1).astype(np.float64)

    def pixel_index(self, u, v):
        """Row-major index of the pixel containing each coordinate, -1 outside."""
        ui = np.floor(np.asarray(u) + 0.5)
        vi = np.floor(np.asarray(v) + 0.5)
        inside = (ui >= 0) & (ui < self.width) & (vi >= 0) & (vi < self.height)
        idx = np.where(inside, vi * self.width + ui, -1)
        return np.where(np.isfinite(idx), idx, -1).astype(np.int64)


@dataclass(frozen=True)
class Rig:
    camera: PinholeDevice
    projector: PinholeDevice

    def __post_init__(self):
        if np.linalg.norm(self.camera.center - self.projector.center) < 1e-12:
            raise ZeroBaseline("camera and projector centers coincide")

    def swapped(self) -> "Rig":
        """Same devices with the emitting and sensing roles exchanged."""
        return Rig(self.projector, self.camera)

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.projector.center - self.camera.center))


@dataclass(frozen=True)
class RectifiedRig:
    """A rig plus the row-aligned virtual devices produced by ``rectify``.

    ``h_cam``/``h_proj`` map original pixel coordinates to rectified ones.
    """

    rig: Rig
    h_cam: np.ndarray
    h_proj: np.ndarray
    baseline: float
    camera: PinholeDevice
    projector: PinholeDevice

    @property
    def rectified_rig(self) -> Rig:
        return Rig(self.camera, self.projector)

    def projector_row(self, v_cam: float) -> int:
        """Projector row sharing the epipolar plane of camera row ``v_cam``."""
        v = self.projector.fy / self.camera.fy * (v_cam - self.camera.cy) + self.projector.cy
        return int(np.floor(v + 0.5))


@dataclass(frozen=True)
class CheckerboardSpec:
    rows: int
    cols: int
    square_size: float

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValidationError("rows/cols", "need at least 2 inner corners per axis")
        if not self.square_size > 0:
            raise ValidationError("square_size", "must be positive")

    def corners(self) -> np.ndarray:
        """Inner corners on the board plane, row-major, as ``(N, 2)``."""
        r, c = np.mgrid[0 : self.rows, 0 : self.cols]
        return np.stack([c.reshape(-1), r.reshape(-1)], axis=1).astype(np.float64) * self.square_size


def project(device: PinholeDevice, p: Point3) -> tuple[float, float]:
    pc = device.to_device(p.as_array())
    if pc[2] <= 1e-12:
        raise BehindDevice(f"{p} is behind the device")
    return float(device.fx * pc[0] / pc[2] + device.cx), float(device.fy * pc[1] / pc[2] + device.cy)


def backproject(device: PinholeDevice, pixel, depth: float) -> Point3:
    """World point at device-frame depth ``depth`` along the ray through ``pixel``."""
    if not depth > 0:
        raise NonpositiveDepth(f"depth {depth!r} must be positive")
    u, v = pixel
    local = np.array([(u - device.cx) / device.fx * depth, (v - device.cy) / device.fy * depth, depth])
    return Point3.from_array(device.rotation.T @ (local - device.translation))


def triangulate(rig: Rig, cam_px, proj_px) -> Point3:
    """Midpoint of the common perpendicular between the two pixel rays."""
    c1, c2 = rig.camera.center, rig.projector.center
    d1 = rig.camera.rays(*cam_px)
    d2 = rig.projector.rays(*proj_px)
    d1 = d1 / np.linalg.norm(d1)
    d2 = d2 / np.linalg.norm(d2)
    w = c1 - c2
    b = d1 @ d2
    denom = 1.0 - b * b
    if denom < 1e-9:
        raise ParallelRays("pixel rays are parallel")
    d, e = d1 @ w, d2 @ w
    s = (b * e - d) / denom
    t = (e - b * d) / denom
    return Point3.from_array(0.5 * ((c1 + s * d1) + (c2 + t * d2)))


def _device_with_pose(dev: PinholeDevice, rotation, center, fy, cy) -> PinholeDevice:
    return PinholeDevice(dev.width, dev.height, dev.fx, fy, dev.cx, cy, rotation, -rotation @ center)


def rectify(rig: Rig) -> RectifiedRig:
    """Rotate both devices about their centers so epipolar lines become rows.

    The shared new x-axis is the camera-to-projector baseline. Both devices
    receive a common ``fy``/``cy`` (the means of the originals) so that a
    scene point lands on the same row in each; ``fx``/``cx`` are kept.
    """
    cam, proj = rig.camera, rig.projector
    c1, c2 = cam.center, proj.center
    base = c2 - c1
    length = np.linalg.norm(base)
    if length < 1e-12:
        raise ZeroBaseline("camera and projector centers coincide")
    ex = base / length
    axis = cam.rotation[2] + proj.rotation[2]
    ey = np.cross(axis, ex)
    if np.linalg.norm(ey) < 1e-12:
        raise ZeroBaseline("baseline is parallel to the viewing direction")
    ey /= np.linalg.norm(ey)
    ez = np.cross(ex, ey)
    r_new = np.array([ex, ey, ez])
    fy = 0.5 * (cam.fy + proj.fy)
    cy = 0.5 * (cam.cy + proj.cy)
    cam_r = _device_with_pose(cam, r_new, c1, fy, cy)
    proj_r = _device_with_pose(proj, r_new, c2, fy, cy)
    h_cam = cam_r.K @ r_new @ cam.rotation.T @ np.linalg.inv(cam.K)
    h_proj = proj_r.K @ r_new @ proj.rotation.T @ np.linalg.inv(proj.K)
    return RectifiedRig(rig, h_cam, h_proj, float(length), cam_r, proj_r)


def apply_homography(h: np.ndarray, u, v):
    p = h @ np.stack([np.asarray(u, float), np.asarray(v, float), np.ones(np.shape(u))])
    return p[0] / p[2], p[1] / p[2]


def look_at(center, target, up=(0.0, -1.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """``(rotation, translation)`` for a device at ``center`` facing ``target``.

    ``up`` is the world direction that should map to image -v.
    """
    center = np.asarray(center, float)
    z = np.asarray(target, float) - center
    z /= np.linalg.norm(z)
    x = np.cross(np.asarray(up, float) * -1.0, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    r = np.array([x, y, z])
    return r, -r @ center
