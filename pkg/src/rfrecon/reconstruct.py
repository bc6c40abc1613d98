"""Depth from a single irradiance image plus the transport matrix.

The irradiance model for a camera pixel observing surface point ``p`` is

    e = T(p) * (n . w) / |o2 - p|^2,    n = (dz/dx, dz/dy, -1)

where ``T(p)`` is the transport entry linking the pixel to the projector
pixel that lights ``p``, ``o2`` is the camera center and ``w`` the unit
direction from ``p`` toward the camera (or toward the projector when
``foreshortening="projector"``). With ``dz/dy = 0`` the model can be solved
for ``dz/dx`` per pixel, and each rectified row is integrated from a
triangulated seed.

Rows are integrated in log-depth over normalized image coordinates, which
keeps the step uniform (one pixel is ``1/fx``) and turns the per-pixel
surface slope into the depth derivative along the camera row.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyRow,
    InvalidSeed,
    NoCorrespondence,
    NumericalFailure,
    SingularRay,
    ValidationError,
    VanishingTransport,
)
from .geometry import PinholeDevice, RectifiedRig, Rig, triangulate
from .transport import TransportMatrix, build_transport_matrix
from .types import Device, HeightField, PixelIndex, Point3


class SeedStrategy(enum.Enum):
    BRIGHTEST = "brightest"
    FIRST_VALID = "first_valid"


@dataclass(frozen=True)
class ReconstructionParams:
    """Guards and knobs for the per-row solver.

    ``subpixel_window`` is the half-width (pixels) of the line fit that
    refines the seed's projector match; 0 disables it. The corrector is the
    implicit trapezoid step, iterated until it moves less than
    ``corrector_tol`` or ``corrector_iterations`` is reached.
    ``profile_refinement`` Gauss-Newton steps then adjust the seed depth so
    the integrated row best reprojects onto every matched projector column;
    0 keeps the triangulated seed as is.
    """

    omega_x_epsilon: float = 1e-3
    transport_epsilon: float = 1e-9
    seed_strategy: SeedStrategy = SeedStrategy.BRIGHTEST
    subpixel_window: int = 8
    corrector_iterations: int = 50
    corrector_tol: float = 1e-13
    foreshortening: str = "camera"
    profile_refinement: int = 3

    def __post_init__(self):
        if not self.omega_x_epsilon > 0:
            raise ValidationError("omega_x_epsilon", "must be positive")
        if not self.transport_epsilon > 0:
            raise ValidationError("transport_epsilon", "must be positive")
        if not isinstance(self.seed_strategy, SeedStrategy):
            try:
                object.__setattr__(self, "seed_strategy", SeedStrategy(self.seed_strategy))
            except ValueError:
                raise ValidationError("seed_strategy", f"unknown strategy {self.seed_strategy!r}") from None
        if self.subpixel_window < 0:
            raise ValidationError("subpixel_window", "must be >= 0")
        if self.corrector_iterations < 1:
            raise ValidationError("corrector_iterations", "must be >= 1")
        if not self.corrector_tol > 0:
            raise ValidationError("corrector_tol", "must be positive")
        if self.profile_refinement < 0:
            raise ValidationError("profile_refinement", "must be >= 0")
        if self.foreshortening not in ("camera", "projector"):
            raise ValidationError("foreshortening", "must be 'camera' or 'projector'")


DEFAULT_PARAMS = ReconstructionParams()


@dataclass(frozen=True)
class IrradianceImage:
    width: int
    height: int
    e: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        e = np.array(self.e, dtype=np.float64).reshape(self.height, self.width)
        valid = np.isfinite(e) if self.valid is None else np.array(self.valid, dtype=bool).reshape(e.shape)
        if not np.all(np.isfinite(e[valid])) or np.any(e[valid] < 0):
            raise ValidationError("e", "irradiance must be finite and >= 0 where valid")
        e = np.where(valid, e, np.nan)
        e.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "valid", valid)


@dataclass(frozen=True)
class PointTransport:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValidationError("value", "point transport must be finite and >= 0")


def _devices(rig):
    return rig.camera, rig.projector


def _as_rig(rig) -> Rig:
    return rig.rectified_rig if isinstance(rig, RectifiedRig) else rig


def _projector_row(rig, v_cam: float) -> int:
    cam, proj = _devices(rig)
    return int(math.floor(proj.fy / cam.fy * (v_cam - cam.cy) + proj.cy + 0.5))


def _check_dims(t: TransportMatrix, rig):
    cam, proj = _devices(rig)
    if (t.rows, t.cols) != (cam.n_pixels, proj.n_pixels):
        raise DimensionMismatch(
            f"transport matrix is {t.rows}x{t.cols}, rig needs {cam.n_pixels}x{proj.n_pixels}")


def row_transport(t: TransportMatrix, rig, row: int):
    """Per-pixel ``(T, projector column)`` along camera row ``row``.

    Each camera pixel takes the largest entry among the projector pixels on
    the matching rectified row; ties go to the smaller column. Pixels whose
    row has no projector counterpart get ``(0, -1)``.
    """
    cam, proj = _devices(rig)
    vp = _projector_row(rig, row)
    if not 0 <= vp < proj.height:
        return np.zeros(cam.width), np.full(cam.width, -1, np.int64)
    block = t.data[row * cam.width : (row + 1) * cam.width, vp * proj.width : (vp + 1) * proj.width]
    cols = np.argmax(block, axis=1)
    return block[np.arange(cam.width), cols], cols.astype(np.int64)


def point_transport_from_matrix(t: TransportMatrix, rig, cam_px: PixelIndex, depth_hypothesis=None,
                                params: ReconstructionParams = DEFAULT_PARAMS):
    """Transport scalar for one camera pixel and the projector pixel it links to.

    Without ``depth_hypothesis`` the brightest entry on the epipolar row wins.
    With one, the above-threshold entry whose column is nearest the projection
    of the back-projected point is chosen instead.
    """
    _check_dims(t, rig)
    cam, proj = _devices(rig)
    cam_px.check(cam.width, cam.height)
    vp = _projector_row(rig, cam_px.v)
    if not 0 <= vp < proj.height:
        raise NoCorrespondence(f"camera row {cam_px.v} has no projector row")
    entries = t.data[cam_px.linear(cam.width), vp * proj.width : (vp + 1) * proj.width]
    ok = np.nonzero(entries >= params.transport_epsilon)[0]
    if ok.size == 0:
        raise NoCorrespondence(f"no transport above {params.transport_epsilon} for pixel {cam_px}")
    if depth_hypothesis is None:
        j = int(np.argmax(entries))
    else:
        ray = cam.rays(float(cam_px.u), float(cam_px.v))
        p = cam.center + float(depth_hypothesis) * ray
        up, _, _ = proj.project_many(p[None, :])
        j = int(ok[np.argmin(np.abs(ok - up[0]))])
    return PointTransport(float(entries[j])), PixelIndex(j, vp, Device.PROJECTOR)


def _foreshortening_center(rig, params):
    cam, proj = _devices(rig)
    return cam.center if params.foreshortening == "camera" else proj.center


def slope_from_irradiance(e: float, tp: PointTransport, p: Point3, rig,
                          params: ReconstructionParams = DEFAULT_PARAMS) -> float:
    """``dz/dx`` at ``p`` that makes the irradiance model reproduce ``e``."""
    if tp.value < params.transport_epsilon:
        raise VanishingTransport(f"transport {tp.value!r} below {params.transport_epsilon}")
    cam, _ = _devices(rig)
    pa = p.as_array()
    d2 = float(np.sum((cam.center - pa) ** 2))
    w = _foreshortening_center(rig, params) - pa
    w = w / np.linalg.norm(w)
    if abs(w[0]) < params.omega_x_epsilon:
        raise SingularRay(f"|omega_x| = {abs(w[0])!r} below {params.omega_x_epsilon}")
    return float((e * d2 / tp.value + w[2]) / w[0])


def irradiance_from_slope(slope_x: float, slope_y: float, tp: PointTransport, p: Point3, rig,
                          params: ReconstructionParams = DEFAULT_PARAMS) -> float:
    """Forward model for one point; may be negative for back-facing slopes."""
    cam, _ = _devices(rig)
    pa = p.as_array()
    d2 = float(np.sum((cam.center - pa) ** 2))
    w = _foreshortening_center(rig, params) - pa
    w = w / np.linalg.norm(w)
    return tp.value * (slope_x * w[0] + slope_y * w[1] - w[2]) / d2


def integrate_epipolar_line(slopes, valid, seed_x: int, seed_z: float, dx: float) -> np.ndarray:
    """Trapezoid integration outward from ``seed_x``; NaN beyond the first gap."""
    slopes = np.asarray(slopes, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool) & np.isfinite(slopes)
    if not dx > 0:
        raise ValidationError("dx", "must be positive")
    n = slopes.shape[0]
    if not (0 <= seed_x < n) or not valid[seed_x]:
        raise InvalidSeed(f"seed column {seed_x} is masked or out of range")
    z = np.full(n, np.nan)
    z[seed_x] = seed_z
    for step in (1, -1):
        k = seed_x
        acc = float(seed_z)
        while 0 <= k + step < n and valid[k + step]:
            acc += step * 0.5 * dx * (slopes[k] + slopes[k + step])
            k += step
            z[k] = acc
    return z


def _row_seed_pixel(that: np.ndarray, params) -> int:
    ok = that >= params.transport_epsilon
    if not ok.any():
        raise EmptyRow("no pixel on the row has transport above threshold")
    if params.seed_strategy is SeedStrategy.FIRST_VALID:
        return int(np.argmax(ok))
    return int(np.argmax(np.where(ok, that, -np.inf)))


def _refine_match(u0: int, that, cols, params) -> float:
    """Continuous projector column at ``u0`` from a line fit to nearby matches.

    Points more than one pixel off the first fit (depth edges) are dropped
    before refitting.
    """
    w = params.subpixel_window
    if w == 0:
        return float(cols[u0])
    lo, hi = max(0, u0 - w), min(len(cols), u0 + w + 1)
    us = np.arange(lo, hi)
    keep = that[lo:hi] >= params.transport_epsilon
    us, js = us[keep], cols[lo:hi][keep].astype(np.float64)
    if us.size < 3:
        return float(cols[u0])
    fit = np.polyfit(us, js, 1)
    inl = np.abs(np.polyval(fit, us) - js) <= 1.0
    if inl.sum() >= 3:
        fit = np.polyfit(us[inl], js[inl], 1)
    return float(np.polyval(fit, u0))


def _seed(t, rig, row, params, that=None, cols=None):
    if that is None:
        that, cols = row_transport(t, rig, row)
    u0 = _row_seed_pixel(that, params)
    jc = _refine_match(u0, that, cols, params)
    vp = _projector_row(rig, row)
    p = triangulate(_as_rig(rig), (float(u0), float(row)), (jc, float(vp)))
    cam, _ = _devices(rig)
    z = float(cam.to_device(p.as_array())[2])
    if not z > 0:
        raise EmptyRow(f"seed on row {row} triangulates behind the camera")
    return u0, z


def seed_depth(t: TransportMatrix, rig, row: int, params: ReconstructionParams = DEFAULT_PARAMS):
    """``(seed_x, seed_z)`` for one camera row, ``seed_z`` being camera-frame depth."""
    _check_dims(t, rig)
    cam, _ = _devices(rig)
    if not 0 <= row < cam.height:
        raise ValidationError("row", f"{row} outside 0..{cam.height - 1}")
    return _seed(t, rig, row, params)


class _RowSolver:
    """Log-depth slope along one camera row with scalar arithmetic."""

    def __init__(self, rig, row, e_row, t_row, params):
        cam, _ = _devices(rig)
        self.c = cam.center
        self.q = _foreshortening_center(rig, params)
        self.use_cam = params.foreshortening == "camera"
        self.ex = cam.rotation[0]
        u = np.arange(cam.width, dtype=np.float64)
        self.rays = cam.rays(u, np.full_like(u, float(row)))
        self.r2 = np.sum(self.rays**2, axis=1)
        self.e = e_row
        self.t = t_row
        self.params = params

    def ok(self, k) -> bool:
        return bool(np.isfinite(self.e[k]) and self.t[k] >= self.params.transport_epsilon)

    def slope_x(self, k, depth) -> float:
        r = self.rays[k]
        if self.use_cam:
            w = -r / math.sqrt(self.r2[k])
        else:
            w = self.q - (self.c + depth * r)
            w = w / math.sqrt(w @ w)
        if abs(w[0]) < self.params.omega_x_epsilon:
            raise SingularRay("ray nearly perpendicular to x")
        d2 = depth * depth * self.r2[k]
        return (self.e[k] * d2 / self.t[k] + w[2]) / w[0]

    def g_slope(self, k, g) -> float:
        """d(ln z)/da for normalized image coordinate a along the row."""
        zx = self.slope_x(k, math.exp(g))
        r = self.rays[k]
        den = zx * r[0] - r[2]
        if den == 0.0 or not math.isfinite(zx):
            raise NumericalFailure("surface tangent to the camera ray")
        return -(zx * self.ex[0] - self.ex[2]) / den


def _solve_row(solver: _RowSolver, u0: int, z0: float, h: float, params):
    """Converged log-depth slopes marching outward from the seed."""
    n = len(solver.e)
    slopes = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    g0 = math.log(z0)
    try:
        slopes[u0] = solver.g_slope(u0, g0)
    except NumericalFailure:
        return slopes, valid
    valid[u0] = True
    for step in (1, -1):
        k, g = u0, g0
        while 0 <= k + step < n and solver.ok(k + step):
            try:
                s0 = slopes[k]
                g_next = g + step * h * s0
                for _ in range(params.corrector_iterations):
                    s1 = solver.g_slope(k + step, g_next)
                    g_new = g + 0.5 * step * h * (s0 + s1)
                    done = abs(g_new - g_next) <= params.corrector_tol
                    g_next = g_new
                    if done:
                        break
                s1 = solver.g_slope(k + step, g_next)
            except (NumericalFailure, OverflowError):
                break
            # exp(g) underflowing to 0 would fabricate a zero depth
            if not (math.isfinite(g_next) and math.isfinite(s1) and math.exp(g_next) > 0):
                break
            k += step
            g = g_next
            slopes[k] = s1
            valid[k] = True
    return slopes, valid


def _integrate_row(solver, u0, z0, h, params):
    slopes, valid = _solve_row(solver, u0, z0, h, params)
    if not valid[u0]:
        return None
    return np.exp(integrate_epipolar_line(slopes, valid, u0, math.log(z0), h))


def _refine_seed(solver, rig, u0, z0, cols, h, params):
    """Seed depth whose integrated row best matches the projector columns.

    Pixel-level matches quantize the triangulated seed; the whole row's
    reprojection residual averages that quantization out. Rows with depth
    edges keep only residuals within two pixels after the first step.
    """
    _, proj = _devices(rig)

    def residual(z):
        depth = _integrate_row(solver, u0, z, h, params)
        if depth is None:
            return None
        jp, _, _ = proj.project_many(solver.c + depth[:, None] * solver.rays)
        return np.where(cols >= 0, jp - cols, np.nan)

    limit = np.inf
    for _ in range(params.profile_refinement):
        dz = 1e-6 * z0
        r0, r1 = residual(z0), residual(z0 + dz)
        if r0 is None or r1 is None:
            break
        m = np.isfinite(r0) & np.isfinite(r1) & (np.abs(r0) <= limit)
        jac = (r1 - r0) / dz
        denom = float(np.sum(jac[m] ** 2))
        if m.sum() < 3 or denom == 0.0:
            break
        step = -float(np.sum(jac[m] * r0[m])) / denom
        z_new = z0 + step
        if not (z_new > 0 and math.isfinite(z_new)):
            break
        z0 = z_new
        limit = 2.0
        if abs(step) <= 1e-12 * z0:
            break
    return z0


def camera_grid(cam: PinholeDevice, z, valid=None) -> HeightField:
    """Camera-pixel depth map in normalized image coordinates."""
    return HeightField(cam.width, cam.height, 1.0 / cam.fx, 1.0 / cam.fy, z, valid,
                       -cam.cx / cam.fx, -cam.cy / cam.fy)


def _reconstruct(e: IrradianceImage, t: TransportMatrix, rig, params, constant_fr=None) -> HeightField:
    cam, _ = _devices(rig)
    _check_dims(t, rig)
    if (e.width, e.height) != (cam.width, cam.height):
        raise DimensionMismatch(f"irradiance is {e.width}x{e.height}, camera is {cam.width}x{cam.height}")
    h = 1.0 / cam.fx
    depth = np.full((cam.height, cam.width), np.nan)
    for row in range(cam.height):
        that, cols = row_transport(t, rig, row)
        try:
            u0, z0 = _seed(t, rig, row, params, that, cols)
        except NumericalFailure:
            continue
        t_row = that if constant_fr is None else np.full(cam.width, float(constant_fr))
        e_row = np.where(e.valid[row], e.e[row], np.nan)
        if constant_fr is not None:
            # seeds still come from the matrix; shading uses the constant
            e_row = np.where(that >= params.transport_epsilon, e_row, np.nan)
        solver = _RowSolver(rig, row, e_row, t_row, params)
        if not solver.ok(u0):
            continue
        if params.profile_refinement:
            z0 = _refine_seed(solver, rig, u0, z0, np.where(that >= params.transport_epsilon, cols, -1),
                              h, params)
        z_row = _integrate_row(solver, u0, z0, h, params)
        if z_row is not None:
            depth[row] = z_row
    return camera_grid(cam, depth)


def reconstruct_depthmap(e: IrradianceImage, t: TransportMatrix, rig,
                         params: ReconstructionParams = DEFAULT_PARAMS) -> HeightField:
    """Per-camera-pixel depth; failures become masked (NaN) cells."""
    return _reconstruct(e, t, rig, params)


def _camera_hits(scene, cam: PinholeDevice):
    u, v = cam.pixel_grid()
    rays = cam.rays(u, v)
    t_hit, kc, kr = scene.grid.intersect(cam.center, rays)
    return rays, t_hit, kc, kr


def render_depth(scene, rig) -> HeightField:
    """Ground-truth camera-frame depth per pixel by ray casting; misses are NaN."""
    cam, _ = _devices(rig)
    _, t_hit, _, _ = _camera_hits(scene, cam)
    z = np.where(np.isfinite(t_hit), t_hit, np.nan).reshape(cam.height, cam.width)
    return camera_grid(cam, z)


def forward_irradiance(scene, rig, transport: TransportMatrix | None = None,
                       params: ReconstructionParams = DEFAULT_PARAMS) -> IrradianceImage:
    """Simulated irradiance image; ``T(p)`` is read from the transport matrix.

    Shadowed pixels (no transport link) have irradiance 0. Misses and
    surfaces facing away from the foreshortening direction are invalid.
    """
    cam, _ = _devices(rig)
    if transport is None:
        transport = build_transport_matrix(scene, _as_rig(rig))
    _check_dims(transport, rig)
    rays, t_hit, kc, kr = _camera_hits(scene, cam)
    hit = np.isfinite(t_hit)
    e = np.full(cam.n_pixels, np.nan)
    if hit.any():
        p = cam.center + t_hit[hit, None] * rays[hit]
        zx, zy = scene.grid.slopes(p, kc[hit], kr[hit])
        w = _foreshortening_center(rig, params) - p
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        ndotw = zx * w[:, 0] + zy * w[:, 1] - w[:, 2]
        d2 = np.sum((cam.center - p) ** 2, axis=1)
        that = np.concatenate([row_transport(transport, rig, r)[0] for r in range(cam.height)])[hit]
        that = np.where(that >= params.transport_epsilon, that, 0.0)
        e[hit] = np.where(ndotw > 0, that * ndotw / d2, np.nan)
    e = e.reshape(cam.height, cam.width)
    return IrradianceImage(cam.width, cam.height, e, np.isfinite(e))
