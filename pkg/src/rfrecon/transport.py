"""Discrete light transport between a projector and a camera.

Entries of the transport matrix are BRDF values linking one camera pixel to
one projector pixel through a single surface bounce. Link points are the
surface hits of both devices' pixel-center rays; each link is shadow-tested
toward the other device, and a matrix entry is the mean BRDF over its links.
Because the link set does not depend on which device emits, and the BRDF is
evaluated with ``omega_in`` toward the emitter, the role-swapped matrix is
the exact transpose of the forward one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .brdf import eval_brdf_many
from .errors import DimensionMismatch, StorageError, ValidationError
from .geometry import PinholeDevice, Rig
from .io import atomic_write, read_bytes
from .types import Device, LightFieldVector, PixelIndex

SHADOW_TOL = 1e-7
MAGIC = b"TMAT"
VERSION = 1


@dataclass(frozen=True)
class TransportMatrix:
    """Dense ``(rows, cols)`` matrix: camera pixels by projector pixels."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError("data", "transport matrix must be 2-D")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValidationError("data", "entries must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TransportMatrix):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


def _unit(v):
    # a zero vector (device center on the surface) gives NaN, which fails every facing test
    with np.errstate(invalid="ignore", divide="ignore"):
        return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _links(scene, src: PinholeDevice, dst: PinholeDevice, src_emits: bool):
    """Links anchored at the surface hits of ``src``'s pixel-center rays.

    Returns ``(src_pixel, dst_pixel, value)`` arrays, one entry per link.
    """
    u, v = src.pixel_grid()
    origin = src.center
    t_hit, kc, kr = scene.grid.intersect(origin, src.rays(u, v))
    hit = np.isfinite(t_hit)
    idx_src = np.nonzero(hit)[0]
    if idx_src.size == 0:
        empty = np.zeros(0, np.int64)
        return empty, empty, np.zeros(0)
    p = origin + t_hit[hit, None] * src.rays(u[hit], v[hit])
    kc, kr = kc[hit], kr[hit]

    ud, vd, zd = dst.project_many(p)
    idx_dst = dst.pixel_index(ud, vd)
    keep = (zd > 1e-12) & (idx_dst >= 0)

    # shadow ray from the destination center; the first hit must be p itself
    seg = p - dst.center
    t_back, _, _ = scene.grid.intersect(dst.center, seg, 0.0, 1.0 + SHADOW_TOL)
    keep &= ~(t_back < 1.0 - SHADOW_TOL)

    zx, zy = scene.grid.slopes(p, kc, kr)
    n, tg, bt = scene.frames(zx, zy)
    w_src = _unit(origin - p)
    w_dst = _unit(dst.center - p)
    keep &= (np.sum(n * w_src, axis=-1) > 0) & (np.sum(n * w_dst, axis=-1) > 0)

    w_in, w_out = (w_src, w_dst) if src_emits else (w_dst, w_src)
    sel = np.nonzero(keep)[0]
    val = eval_brdf_many(scene.brdf, n[sel], tg[sel], bt[sel], w_in[sel], w_out[sel])
    return idx_src[sel], idx_dst[sel], val


def _all_links(scene, rig: Rig):
    """Camera-pixel, projector-pixel and value arrays over both link sets."""
    c_a, p_a, v_a = _links(scene, rig.camera, rig.projector, src_emits=False)
    p_b, c_b, v_b = _links(scene, rig.projector, rig.camera, src_emits=True)
    return np.concatenate([c_a, c_b]), np.concatenate([p_a, p_b]), np.concatenate([v_a, v_b])


def _assemble(cam, proj, val, shape):
    total = np.zeros(shape)
    count = np.zeros(shape)
    np.add.at(total, (cam, proj), val)
    np.add.at(count, (cam, proj), 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1.0), 0.0)


def build_transport_matrix(scene, rig: Rig) -> TransportMatrix:
    cam, proj, val = _all_links(scene, rig)
    return TransportMatrix(_assemble(cam, proj, val, (rig.camera.n_pixels, rig.projector.n_pixels)))


def render_impulse_response(scene, rig: Rig, proj_pixel: PixelIndex) -> LightFieldVector:
    """Camera image produced by unit radiance through one projector pixel."""
    if proj_pixel.device is not Device.PROJECTOR:
        raise ValidationError("proj_pixel", "must index the projector")
    j = proj_pixel.check(rig.projector.width, rig.projector.height).linear(rig.projector.width)
    cam, proj, val = _all_links(scene, rig)
    sel = proj == j
    col = _assemble(cam[sel], np.zeros(int(sel.sum()), np.int64), val[sel], (rig.camera.n_pixels, 1))
    return LightFieldVector(col[:, 0])


def apply_transport(t: TransportMatrix, illumination: LightFieldVector) -> LightFieldVector:
    if len(illumination) != t.cols:
        raise DimensionMismatch(f"illumination has {len(illumination)} entries, matrix has {t.cols} columns")
    return LightFieldVector(np.maximum(t.data @ illumination.values, 0.0))


def dual_photograph(t: TransportMatrix, camera_illumination: LightFieldVector) -> LightFieldVector:
    """Image the projector would record if the camera were the light source."""
    if len(camera_illumination) != t.rows:
        raise DimensionMismatch(
            f"camera illumination has {len(camera_illumination)} entries, matrix has {t.rows} rows")
    return LightFieldVector(np.maximum(t.data.T @ camera_illumination.values, 0.0))


def reciprocity_deviation(t_forward: TransportMatrix, t_reverse: TransportMatrix) -> float:
    if t_forward.data.shape != t_reverse.data.shape[::-1]:
        raise DimensionMismatch(
            f"reverse matrix {t_reverse.data.shape} is not the transpose shape of {t_forward.data.shape}")
    if t_forward.data.size == 0:
        return 0.0
    diff = np.max(np.abs(t_forward.data - t_reverse.data.T))
    peak = max(1.0, float(t_forward.data.max()), float(t_reverse.data.max()))
    return float(diff / peak)


def encode_tmat(t: TransportMatrix) -> bytes:
    header = MAGIC + struct.pack("<III", VERSION, t.rows, t.cols)
    return header + np.ascontiguousarray(t.data, dtype="<f4").tobytes()


def decode_tmat(data: bytes) -> TransportMatrix:
    if len(data) < 16 or data[:4] != MAGIC:
        raise StorageError("not a TMAT file")
    version, rows, cols = struct.unpack("<III", data[4:16])
    if version != VERSION:
        raise StorageError(f"unsupported TMAT version {version}")
    body = data[16:]
    if len(body) != 4 * rows * cols:
        raise StorageError(f"TMAT body has {len(body)} bytes, expected {4 * rows * cols}")
    values = np.frombuffer(body, dtype="<f4").reshape(rows, cols)
    return TransportMatrix(values.astype(np.float64))


def write_tmat(path, t: TransportMatrix) -> None:
    atomic_write(path, encode_tmat(t))


def read_tmat(path) -> TransportMatrix:
    return decode_tmat(read_bytes(path))
