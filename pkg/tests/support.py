"""Shared scenes and rigs for the test suite."""

from functools import lru_cache

import numpy as np

from rfrecon.brdf import BlinnPhong, Lambertian, WardAnisotropic
from rfrecon.geometry import PinholeDevice, Rig, rectify
from rfrecon.reconstruct import forward_irradiance, render_depth
from rfrecon.scene import Scene, cube_surface, plane_surface, ruled_sine_surface
from rfrecon.transport import build_transport_matrix

WARD = WardAnisotropic(0.2, 0.3, 0.1, 0.4)


def covering_projector(size, f, cam_cx, baseline, z_left, z_right, shrink=0.8):
    """Projector on +x whose columns span the camera's view of a surface.

    ``z_left``/``z_right`` are the surface depths seen by the first and last
    camera columns; ``shrink`` < 1 coarsens the projector relative to the
    exact cover so every camera pixel keeps a projector match.
    """
    s0 = (0 - cam_cx) / f - baseline / z_left
    s1 = (size - 1 - cam_cx) / f - baseline / z_right
    fx = shrink * (size - 2) / (s1 - s0)
    cx = 0.5 - fx * s0
    return PinholeDevice(size, size, fx, f, cx, (size - 1) / 2, np.eye(3), [-baseline, 0.0, 0.0])


def ward_plane_rig(size=64, slope=0.5, offset=3.0, baseline=12.0, f=100.0, cam_cx=-20.0):
    """Camera at the origin with its principal point left of the image.

    Every camera ray then has a positive x component, so each row is
    integrated away from the column where the slope formula is singular.
    """
    z_left = offset / (1 - slope * (0 - cam_cx) / f)
    z_right = offset / (1 - slope * (size - 1 - cam_cx) / f)
    cam = PinholeDevice(size, size, f, f, cam_cx, (size - 1) / 2)
    return Rig(cam, covering_projector(size, f, cam_cx, baseline, z_left, z_right))


def ward_plane_scene(slope=0.5, offset=3.0, brdf=WARD):
    hf = plane_surface(141, 101, 0.05, 0.05, slope, 0.0, offset, x0=-1.0, y0=-2.5)
    return Scene(hf, brdf, np.pi / 2)


@lru_cache(maxsize=None)
def ward_plane_case(size=64):
    """``(scene, rectified rig, transport, irradiance, truth)`` for z = 0.5 x + 3."""
    scene = ward_plane_scene()
    rr = rectify(ward_plane_rig(size))
    t = build_transport_matrix(scene, rr.rectified_rig)
    e = forward_irradiance(scene, rr, t)
    return scene, rr, t, e, render_depth(scene, rr)


def stereo_rig(size=32, f=100.0, baseline=1.0):
    """Two identical fronto-parallel devices, projector on +x."""
    c = (size - 1) / 2
    cam = PinholeDevice(size, size, f, f, c, c)
    proj = PinholeDevice(size, size, f, f, c, c, np.eye(3), [-baseline, 0.0, 0.0])
    return Rig(cam, proj)


def flat_scene(depth=10.0, brdf=Lambertian(0.8), extent=6.0, spacing=0.25):
    n = int(round(2 * extent / spacing)) + 1
    hf = plane_surface(n, n, spacing, spacing, 0.0, 0.0, depth, x0=-extent, y0=-extent)
    return Scene(hf, brdf)


def reciprocity_scenes():
    """Lambertian plane, Blinn-Phong ramp and Ward cube, all in view of ``stereo_rig(32, 40, 1.5)``."""
    plane = flat_scene(8.0, Lambertian(0.7), extent=5.0)
    ramp = Scene(plane_surface(41, 41, 0.25, 0.25, 0.3, 0.1, 8.0, x0=-5.0, y0=-5.0),
                 BlinnPhong(0.3, 0.6, 20.0))
    cube = Scene(cube_surface(81, 81, 0.125, 0.125, 2.0, 0.3, -0.2, 0.5, 9.0, x0=-5.0, y0=-5.0),
                 WardAnisotropic(0.2, 0.3, 0.1, 0.4), 0.7)
    return {"lambertian_plane": plane, "blinn_phong_ramp": ramp, "ward_cube": cube}


def sine_scene(amplitude=0.5, period=4.0, offset=4.0, spacing=0.01):
    hf = ruled_sine_surface(int(8 / spacing) + 1, int(5 / spacing) + 1, spacing, spacing, amplitude, period,
                            offset, x0=-1.0, y0=-2.5)
    return Scene(hf, WARD, np.pi / 2)


def sine_rig(size=64):
    cam = PinholeDevice(size, size, 100.0, 100.0, -20.0, (size - 1) / 2)
    proj = PinholeDevice(size, size, 60.0, 100.0, 40.0, (size - 1) / 2, np.eye(3), [-2.0, 0.0, 0.0])
    return Rig(cam, proj)


@lru_cache(maxsize=None)
def sine_case(size=64):
    """``(scene, rectified rig, transport, irradiance, truth)`` for the Ward ruled sine."""
    scene = sine_scene()
    rr = rectify(sine_rig(size))
    t = build_transport_matrix(scene, rr.rectified_rig)
    e = forward_irradiance(scene, rr, t)
    return scene, rr, t, e, render_depth(scene, rr)
