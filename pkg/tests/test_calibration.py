import numpy as np
import pytest

from rfrecon.brdf import Lambertian
from rfrecon.calibration import (
    BoardPose,
    board_view,
    calibrate_planar,
    calibrate_rig,
    checkerboard_image,
    homography,
    random_board_poses,
    synthesize_projector_views,
    transfer_points,
)
from rfrecon.errors import DegenerateViews, DimensionMismatch, InsufficientViews
from rfrecon.geometry import CheckerboardSpec, PinholeDevice, apply_homography, look_at
from rfrecon.scene import Scene, plane_surface
from rfrecon.transport import TransportMatrix, build_transport_matrix
from rfrecon.types import LightFieldVector

from support import stereo_rig

SPEC = CheckerboardSpec(8, 6, 0.5)
TRUE = PinholeDevice(640, 480, 820.0, 790.0, 330.0, 235.0)


def _views(device, n=5, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    views = [board_view(device, SPEC, pose) for pose in random_board_poses(SPEC, n, rng)]
    return [v + rng.normal(0, noise, v.shape) for v in views] if noise else views


def test_homography_exact():
    h = np.array([[1.2, 0.1, 5.0], [-0.2, 0.9, 3.0], [1e-3, 2e-3, 1.0]])
    src = SPEC.corners()
    u, v = apply_homography(h, src[:, 0], src[:, 1])
    est = homography(src, np.column_stack([u, v]))
    assert np.allclose(est / est[2, 2], h, atol=1e-10)


@pytest.mark.parametrize("refine", [False, True])
def test_five_noiseless_views(refine):
    dev = calibrate_planar(_views(TRUE), SPEC, (640, 480), refine=refine)
    for name in ("fx", "fy", "cx", "cy"):
        assert abs(getattr(dev, name) / getattr(TRUE, name) - 1) <= 1e-3


def test_noisy_views_stay_close():
    dev = calibrate_planar(_views(TRUE, n=10, noise=0.1), SPEC, (640, 480))
    assert abs(dev.fx / TRUE.fx - 1) <= 0.01 and abs(dev.cy / TRUE.cy - 1) <= 0.02


def test_two_views_insufficient():
    with pytest.raises(InsufficientViews):
        calibrate_planar(_views(TRUE, n=2), SPEC, (640, 480))


def test_identical_views_degenerate():
    v = _views(TRUE, n=1)[0]
    with pytest.raises(DegenerateViews):
        calibrate_planar([v] * 5, SPEC, (640, 480))


def test_view_shape_checked():
    views = _views(TRUE, n=3)
    with pytest.raises(DimensionMismatch):
        calibrate_planar(views[:2] + [views[2][:-1]], SPEC, (640, 480))


def test_rig_recovers_relative_pose():
    r, t = look_at([2.0, 0.0, 0.0], [0.0, 0.0, 10.0])
    proj = PinholeDevice(800, 600, 1000.0, 1000.0, 400.0, 300.0, r, t)
    rng = np.random.default_rng(4)
    poses = random_board_poses(SPEC, 6, rng)
    rig = calibrate_rig([board_view(TRUE, SPEC, p) for p in poses], [board_view(proj, SPEC, p) for p in poses],
                        SPEC, (640, 480), (800, 600))
    base = rig.projector.center - rig.camera.center
    assert np.linalg.norm(base) == pytest.approx(2.0, rel=1e-6)
    rel = rig.projector.rotation @ rig.camera.rotation.T
    assert np.allclose(rel, r, atol=1e-6)


def test_synthesized_views():
    t = TransportMatrix(np.arange(12, dtype=float).reshape(4, 3))
    zero, white = synthesize_projector_views(t, [LightFieldVector(np.zeros(4)), LightFieldVector(np.ones(4))])
    assert not zero.values.any()
    assert np.array_equal(white.values, t.data.sum(axis=0))
    with pytest.raises(DimensionMismatch):
        synthesize_projector_views(t, [LightFieldVector(np.ones(3))])


@pytest.fixture(scope="module")
def board_plane():
    rig = stereo_rig(64, 100.0, 1.0)
    scene = Scene(plane_surface(161, 161, 0.05, 0.05, 0.1, 0.05, 8.0, x0=-4.0, y0=-4.0), Lambertian(0.9))
    return rig, build_transport_matrix(scene, rig)


def test_transfer_matches_analytic_projection(board_plane):
    rig, t = board_plane
    xs, ys = np.meshgrid(np.linspace(-0.9, 1.6, 6), np.linspace(-1.2, 1.2, 5))
    pts = np.column_stack([xs.ravel(), ys.ravel(), 0.1 * xs.ravel() + 0.05 * ys.ravel() + 8.0])
    cu, cv, _ = rig.camera.project_many(pts)
    pu, pv, _ = rig.projector.project_many(pts)
    got = transfer_points(t, rig, np.column_stack([cu, cv]))
    err = np.hypot(got[:, 0] - pu, got[:, 1] - pv)
    assert err.max() <= 0.5


def test_dual_checkerboard_lands_on_board(board_plane):
    rig, t = board_plane
    # board lying in the surface plane; its dual image should be bright where the board is white
    normal = np.array([0.1, 0.05, -1.0])
    x_axis = np.array([1.0, 0.0, 0.1]) / np.linalg.norm([1.0, 0.0, 0.1])
    y_axis = np.cross(normal / np.linalg.norm(normal), x_axis)
    origin = np.array([-0.6, -0.6, 0.1 * -0.6 + 0.05 * -0.6 + 8.0])
    pose = BoardPose(np.column_stack([x_axis, -y_axis, np.cross(x_axis, -y_axis)]), origin)
    cam_img = checkerboard_image(rig.camera, SPEC, pose)
    proj_direct = checkerboard_image(rig.projector, SPEC, pose).values
    proj_dual = synthesize_projector_views(t, [cam_img])[0].values
    assert proj_dual.max() > 0
    corr = np.corrcoef(proj_dual, proj_direct)[0, 1]
    assert corr > 0.8
