import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from rfrecon.errors import BehindDevice, NonpositiveDepth, ParallelRays, ValidationError, ZeroBaseline
from rfrecon.geometry import (
    CheckerboardSpec,
    PinholeDevice,
    Rig,
    apply_homography,
    backproject,
    look_at,
    project,
    rectify,
    triangulate,
)
from rfrecon.types import Point3

DEV = PinholeDevice(64, 64, 100.0, 100.0, 32.0, 32.0)


def test_project_principal_point():
    assert project(DEV, Point3(0, 0, 1)) == (32.0, 32.0)


def test_project_similar_triangles():
    u, v = project(DEV, Point3(0.1, 0, 1))
    assert u == pytest.approx(42.0) and v == 32.0


def test_project_behind():
    with pytest.raises(BehindDevice):
        project(DEV, Point3(0, 0, -1))


def test_backproject_examples():
    assert backproject(DEV, (32.0, 32.0), 1.0) == Point3(0.0, 0.0, 1.0)
    p = backproject(DEV, (42.0, 32.0), 1.0)
    assert p.as_array() == pytest.approx([0.1, 0.0, 1.0])
    with pytest.raises(NonpositiveDepth):
        backproject(DEV, (1.0, 1.0), 0.0)


def test_rotation_must_be_proper():
    with pytest.raises(ValidationError):
        PinholeDevice(4, 4, 1.0, 1.0, 0.0, 0.0, np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValidationError):
        PinholeDevice(4, 4, -1.0, 1.0, 0.0, 0.0)


def _posed_device(rng):
    r = Rotation.from_rotvec(rng.normal(0, 0.2, 3)).as_matrix()
    return PinholeDevice(64, 48, rng.uniform(50, 150), rng.uniform(50, 150), rng.uniform(20, 40),
                         rng.uniform(15, 30), r, rng.normal(0, 1, 3))


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_project_backproject_round_trip(seed):
    rng = np.random.default_rng(seed)
    dev = _posed_device(rng)
    for _ in range(50):
        px = (rng.uniform(0, 64), rng.uniform(0, 48))
        depth = rng.uniform(0.5, 20)
        back = project(dev, backproject(dev, px, depth))
        assert np.allclose(back, px, rtol=0, atol=1e-9)
        p = Point3.from_array(dev.center + dev.rotation.T @ np.array([*rng.uniform(-1, 1, 2), 1.0]) * depth)
        pc = dev.to_device(p.as_array())
        again = backproject(dev, project(dev, p), pc[2])
        assert np.allclose(again.as_array(), p.as_array(), rtol=0, atol=1e-9 * max(1.0, depth))


def test_triangulate_exact():
    rig = Rig(DEV, PinholeDevice(64, 64, 90.0, 100.0, 30.0, 32.0, np.eye(3), [-1.0, 0.0, 0.0]))
    p = Point3(0.3, -0.2, 7.0)
    q = triangulate(rig, project(rig.camera, p), project(rig.projector, p))
    assert np.allclose(q.as_array(), p.as_array(), atol=1e-6)


def test_triangulate_parallel_on_epipole():
    rig = Rig(DEV, PinholeDevice(64, 64, 100.0, 100.0, 32.0, 32.0, np.eye(3), [0.0, 0.0, -1.0]))
    with pytest.raises(ParallelRays):
        triangulate(rig, (32.0, 32.0), (32.0, 32.0))


def test_triangulate_noisy_30_degree_rig():
    rng = np.random.default_rng(7)
    target = np.array([0.0, 0.0, 10.0])
    half = math.radians(15)
    centers = [np.array([-10 * math.sin(half), 0, 10 - 10 * math.cos(half)]),
               np.array([10 * math.sin(half), 0, 10 - 10 * math.cos(half)])]
    devs = [PinholeDevice(640, 480, 800.0, 800.0, 320.0, 240.0, *look_at(c, target)) for c in centers]
    rig = Rig(*devs)
    for _ in range(100):
        p = target + rng.uniform(-1, 1, 3)
        pt = Point3.from_array(p)
        a = np.array(project(rig.camera, pt)) + rng.uniform(-0.25, 0.25, 2)
        b = np.array(project(rig.projector, pt)) + rng.uniform(-0.25, 0.25, 2)
        q = triangulate(rig, a, b).as_array()
        depth = rig.camera.to_device(p)[2]
        assert abs(rig.camera.to_device(q)[2] - depth) <= 0.01 * depth
        for dev, px in ((rig.camera, a), (rig.projector, b)):
            assert np.linalg.norm(np.array(project(dev, Point3.from_array(q))) - px) <= 0.5


def test_zero_baseline():
    with pytest.raises(ZeroBaseline):
        Rig(DEV, DEV)


def test_rectify_fronto_parallel_is_identity():
    rig = Rig(DEV, PinholeDevice(64, 64, 100.0, 100.0, 32.0, 32.0, np.eye(3), [-2.0, 0.0, 0.0]))
    rr = rectify(rig)
    assert np.allclose(rr.h_cam, np.eye(3), atol=1e-9)
    assert np.allclose(rr.h_proj, np.eye(3), atol=1e-9)
    assert rr.baseline == pytest.approx(2.0)


def _v_disparity(rr, pts):
    cu, cv, _ = rr.camera.project_many(pts)
    pu, pv, _ = rr.projector.project_many(pts)
    return np.abs(cv - pv)


def test_rectify_verged_rig():
    target = np.array([0.0, 0.0, 10.0])
    toe = math.radians(10)
    c1 = np.array([-1.0, 0.0, 0.0])
    c2 = np.array([1.0, 0.2, 0.1])
    r1, t1 = look_at(c1, c1 + [math.sin(toe), 0, math.cos(toe)])
    r2, t2 = look_at(c2, c2 + [-math.sin(toe), 0.05, math.cos(toe)])
    rig = Rig(PinholeDevice(64, 64, 100.0, 105.0, 30.0, 33.0, r1, t1),
              PinholeDevice(64, 64, 90.0, 95.0, 34.0, 31.0, r2, t2))
    rr = rectify(rig)
    rng = np.random.default_rng(3)
    pts = target + rng.uniform(-3, 3, (1000, 3))
    assert _v_disparity(rr, pts).max() <= 1e-6
    # centers preserved and homographies map original pixels to rectified ones
    assert np.allclose(rr.camera.center, rig.camera.center, atol=1e-12)
    assert np.allclose(rr.projector.center, rig.projector.center, atol=1e-12)
    u, v, _ = rig.camera.project_many(pts[:5])
    ur, vr, _ = rr.camera.project_many(pts[:5])
    hu, hv = apply_homography(rr.h_cam, u, v)
    assert np.allclose(hu, ur, atol=1e-9) and np.allclose(hv, vr, atol=1e-9)


@settings(max_examples=25)
@given(st.integers(0, 2**31 - 1))
def test_rectify_random_rigs(seed):
    rng = np.random.default_rng(seed)
    a, b = _posed_device(rng), _posed_device(rng)
    if np.linalg.norm(a.center - b.center) < 0.1:
        return
    rr = rectify(Rig(a, b))
    pts = rng.uniform(-2, 2, (200, 3)) + [0, 0, 15]
    front = (rr.camera.to_device(pts)[:, 2] > 0.1) & (rr.projector.to_device(pts)[:, 2] > 0.1)
    assert _v_disparity(rr, pts[front]).max() <= 1e-6


def test_checkerboard_corners_row_major():
    c = CheckerboardSpec(2, 3, 0.5).corners()
    assert c.tolist() == [[0, 0], [0.5, 0], [1.0, 0], [0, 0.5], [0.5, 0.5], [1.0, 0.5]]
    with pytest.raises(ValidationError):
        CheckerboardSpec(1, 3, 0.5)
