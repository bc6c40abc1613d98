"""Planar-target calibration and projector views by dual photography.

Calibration follows the homography route: one board-to-image homography
per view, closed-form intrinsics from the orthonormality constraints (zero
skew imposed), per-view extrinsics, then a joint least-squares refinement of
reprojection error. Corners are ideal correspondences; detection is not
modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from .errors import DegenerateViews, DimensionMismatch, InsufficientViews, ValidationError
from .geometry import CheckerboardSpec, PinholeDevice, Rig
from .transport import TransportMatrix, dual_photograph
from .types import LightFieldVector

MIN_VIEWS = 3


@dataclass(frozen=True)
class BoardPose:
    """Board-to-device transform: ``x_dev = rotation @ (X, Y, 0) + translation``."""

    rotation: np.ndarray
    translation: np.ndarray


def _normalizer(pts):
    mean = pts.mean(axis=0)
    scale = np.sqrt(2.0) / max(np.mean(np.linalg.norm(pts - mean, axis=1)), 1e-300)
    return np.array([[scale, 0, -scale * mean[0]], [0, scale, -scale * mean[1]], [0, 0, 1.0]])


def homography(src, dst) -> np.ndarray:
    """Normalized DLT homography mapping ``src`` to ``dst`` (both ``(N, 2)``)."""
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)
    ns, nd = _normalizer(src), _normalizer(dst)
    s = (ns @ np.column_stack([src, np.ones(len(src))]).T).T
    d = (nd @ np.column_stack([dst, np.ones(len(dst))]).T).T
    rows = []
    for (x, y, _), (u, v, _) in zip(s, d):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    _, sv, vt = np.linalg.svd(np.array(rows))
    if sv[-2] < 1e-12 * sv[0]:
        raise DegenerateViews("corner set does not determine a homography")
    h = np.linalg.inv(nd) @ vt[-1].reshape(3, 3) @ ns
    return h / h[2, 2]


def _v(h, i, j):
    return np.array([
        h[0, i] * h[0, j],
        h[0, i] * h[1, j] + h[1, i] * h[0, j],
        h[1, i] * h[1, j],
        h[2, i] * h[0, j] + h[0, i] * h[2, j],
        h[2, i] * h[1, j] + h[1, i] * h[2, j],
        h[2, i] * h[2, j],
    ])


def _intrinsics(hs):
    rows = []
    for h in hs:
        # scale-balance each homography so constraint rows are comparable
        h = h / np.linalg.norm(h[:, :2])
        rows.append(_v(h, 0, 1))
        rows.append(_v(h, 0, 0) - _v(h, 1, 1))
    rows.append([0, 1.0, 0, 0, 0, 0])  # zero skew
    a = np.array(rows)
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-9 * sv[0]:
        raise DegenerateViews("board poses do not constrain the intrinsics")
    b11, b12, b22, b13, b23, b33 = vt[-1]
    if b11 < 0:
        b11, b12, b22, b13, b23, b33 = -b11, -b12, -b22, -b13, -b23, -b33
    den = b11 * b22 - b12 * b12
    if b11 <= 0 or den <= 0:
        raise DegenerateViews("intrinsic constraints are not positive definite")
    v0 = (b12 * b13 - b11 * b23) / den
    lam = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11
    if lam / b11 <= 0:
        raise DegenerateViews("intrinsic constraints are inconsistent")
    fx = np.sqrt(lam / b11)
    fy = np.sqrt(lam * b11 / den)
    u0 = -b13 * fx * fx / lam
    return np.array([[fx, 0, u0], [0, fy, v0], [0, 0, 1.0]])


def _extrinsics(k, h):
    kinv = np.linalg.inv(k)
    m = kinv @ h
    scale = 1.0 / np.linalg.norm(m[:, 0])
    if m[2, 2] < 0:
        scale = -scale  # board must lie in front of the device
    r1, r2, t = scale * m[:, 0], scale * m[:, 1], scale * m[:, 2]
    r = np.column_stack([r1, r2, np.cross(r1, r2)])
    u, _, vt = np.linalg.svd(r)
    r = u @ vt
    if np.linalg.det(r) < 0:
        r = u @ np.diag([1, 1, -1.0]) @ vt
    return r, t


def _project_board(k, r, t, board):
    pts = board @ r[:, :2].T + t
    return (pts[:, :2] / pts[:, 2:3]) @ k[:2, :2].T + k[:2, 2]


def _refine(k, poses, board, views):
    x0 = [k[0, 0], k[1, 1], k[0, 2], k[1, 2]]
    for r, t in poses:
        x0.extend(Rotation.from_matrix(r).as_rotvec())
        x0.extend(t)
    x0 = np.array(x0)

    def unpack(x):
        kk = np.array([[x[0], 0, x[2]], [0, x[1], x[3]], [0, 0, 1.0]])
        out = []
        for i in range(len(views)):
            p = x[4 + 6 * i : 10 + 6 * i]
            out.append((Rotation.from_rotvec(p[:3]).as_matrix(), p[3:]))
        return kk, out

    def residual(x):
        kk, ps = unpack(x)
        return np.concatenate([(_project_board(kk, r, t, board) - v).ravel() for (r, t), v in zip(ps, views)])

    sol = least_squares(residual, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return unpack(sol.x)


def calibrate_planar(views, spec: CheckerboardSpec, image_size, refine: bool = True) -> PinholeDevice:
    """Device intrinsics and the pose of view 0's board frame.

    ``views`` holds one ``(rows * cols, 2)`` array of image corners per board
    pose, in the row-major order of ``spec.corners()``. The returned device
    uses the first view's board plane as its world frame (board on z = 0).
    """
    views = [np.asarray(v, dtype=np.float64) for v in views]
    if len(views) < MIN_VIEWS:
        raise InsufficientViews(f"need at least {MIN_VIEWS} views, got {len(views)}")
    board = spec.corners()
    for i, v in enumerate(views):
        if v.shape != board.shape:
            raise DimensionMismatch(f"view {i} has shape {v.shape}, expected {board.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"view {i}", "corner coordinates must be finite")
    hs = [homography(board, v) for v in views]
    k = _intrinsics(hs)
    poses = [_extrinsics(k, h) for h in hs]
    if refine:
        k, poses = _refine(k, poses, board, views)
    width, height = image_size
    r0, t0 = poses[0]
    return PinholeDevice(int(width), int(height), float(k[0, 0]), float(k[1, 1]), float(k[0, 2]),
                         float(k[1, 2]), r0, t0)


def calibrate_rig(camera_views, projector_views, spec: CheckerboardSpec, camera_size, projector_size) -> Rig:
    """Both devices from views of the same board poses, sharing board 0's frame."""
    if len(camera_views) != len(projector_views):
        raise DimensionMismatch("camera and projector need the same number of board views")
    cam = calibrate_planar(camera_views, spec, camera_size)
    proj = calibrate_planar(projector_views, spec, projector_size)
    return Rig(cam, proj)


def random_board_poses(spec: CheckerboardSpec, n: int, rng: np.random.Generator, distance: float = 10.0,
                       max_tilt: float = 0.5):
    """``n`` board poses in the world frame, roughly facing a device at the origin.

    Each pose is a ``BoardPose`` mapping board coordinates to world
    coordinates; the board center sits near ``(0, 0, distance)``.
    """
    center = spec.corners().mean(axis=0)
    poses = []
    for _ in range(n):
        tilt = rng.uniform(-max_tilt, max_tilt, size=2)
        spin = rng.uniform(-0.3, 0.3)
        r = Rotation.from_euler("xyz", [tilt[0], tilt[1], spin]).as_matrix()
        offset = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), distance + rng.uniform(-1, 1)])
        t = offset - r @ np.array([center[0], center[1], 0.0])
        poses.append(BoardPose(r, t))
    return poses


def board_corners_world(spec: CheckerboardSpec, pose: BoardPose) -> np.ndarray:
    c = spec.corners()
    return np.column_stack([c, np.zeros(len(c))]) @ pose.rotation.T + pose.translation


def board_view(device: PinholeDevice, spec: CheckerboardSpec, pose: BoardPose) -> np.ndarray:
    """Image corners of a board pose as seen by ``device``."""
    u, v, z = device.project_many(board_corners_world(spec, pose))
    if np.any(z <= 1e-12):
        raise ValidationError("pose", "board corner behind the device")
    return np.column_stack([u, v])


def synthesize_projector_views(t: TransportMatrix, camera_images_of_board) -> list:
    """Projector-side images of each camera image via the transposed transport."""
    return [dual_photograph(t, img) for img in camera_images_of_board]


def spot_image(device: PinholeDevice, points, sigma: float = 1.0) -> LightFieldVector:
    """Sum of isotropic Gaussian spots at pixel ``points``, row-major flattened."""
    u, v = device.pixel_grid()
    img = np.zeros(device.n_pixels)
    for pu, pv in np.atleast_2d(points):
        img += np.exp(-((u - pu) ** 2 + (v - pv) ** 2) / (2 * sigma * sigma))
    return LightFieldVector(img)


def transfer_points(t: TransportMatrix, rig: Rig, cam_points, sigma: float = 1.0, radius: float = 4.0):
    """Projector-image positions of camera points, located through the dual image.

    Each point is lit as a Gaussian spot on the camera side; its dual
    photograph is a spot in the projector image whose intensity centroid,
    taken within ``radius`` pixels of the peak, is returned. Points whose
    dual image is empty come back as NaN.
    """
    proj = rig.projector
    u, v = proj.pixel_grid()
    out = []
    for p in np.atleast_2d(cam_points):
        img = dual_photograph(t, spot_image(rig.camera, [p], sigma)).values
        if img.max() <= 0:
            out.append((np.nan, np.nan))
            continue
        k = int(np.argmax(img))
        near = (u - u[k]) ** 2 + (v - v[k]) ** 2 <= radius * radius
        w = img * near
        out.append((float(w @ u / w.sum()), float(w @ v / w.sum())))
    return np.array(out)


def checkerboard_image(device: PinholeDevice, spec: CheckerboardSpec, pose: BoardPose,
                       supersample: int = 4) -> LightFieldVector:
    """Binary checkerboard (white = 1) rendered by box-filtered supersampling.

    The printed board has one more square than inner corners along each axis,
    so its outer squares frame every inner corner.
    """
    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    u, v = device.pixel_grid()
    acc = np.zeros(device.n_pixels)
    n = pose.rotation[:, 2]
    c = device.center
    for du in offs:
        for dv in offs:
            d = device.rays(u + du, v + dv)
            denom = d @ n
            with np.errstate(divide="ignore", invalid="ignore"):
                s = ((pose.translation - c) @ n) / denom
            p = c + s[:, None] * d
            local = (p - pose.translation) @ pose.rotation
            i = np.floor(local[:, 0] / spec.square_size) + 1
            j = np.floor(local[:, 1] / spec.square_size) + 1
            on = (s > 0) & (i >= 0) & (i <= spec.cols) & (j >= 0) & (j <= spec.rows)
            acc += np.where(on & ((i + j) % 2 == 0), 1.0, 0.0)
    return LightFieldVector(acc / supersample**2)
