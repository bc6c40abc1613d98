"""Reciprocal BRDF models.

All models evaluate in a local shading frame ``(tangent, bitangent, normal)``
and are written so that swapping the two directions reproduces the value
bit for bit: the half vector is a plain sum and the cosine product is
commutative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BelowHorizon, ValidationError
from .types import Direction

ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class TangentFrame:
    normal: Direction
    tangent: Direction
    bitangent: Direction

    def __post_init__(self):
        n, t, b = (d.as_array() for d in (self.normal, self.tangent, self.bitangent))
        if max(abs(n @ t), abs(n @ b), abs(t @ b)) > ORTHO_TOL:
            raise ValidationError("TangentFrame", "axes are not mutually orthogonal")
        if np.max(np.abs(np.cross(t, b) - n)) > ORTHO_TOL:
            raise ValidationError("TangentFrame", "axes are not right-handed")

    def matrix(self) -> np.ndarray:
        """Rows are tangent, bitangent, normal: maps world vectors to local."""
        return np.array([self.tangent.as_array(), self.bitangent.as_array(), self.normal.as_array()])


def frame_from_normal(normal, reference=(1.0, 0.0, 0.0)) -> TangentFrame:
    """Build a frame whose tangent is ``reference`` projected onto the surface."""
    if isinstance(normal, Direction):
        normal = normal.as_array()
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    t = np.asarray(reference, dtype=np.float64)
    t = t - (t @ n) * n
    if np.linalg.norm(t) < 1e-9:
        raise ValidationError("TangentFrame", "reference direction is parallel to the normal")
    t = t / np.linalg.norm(t)
    b = np.cross(n, t)
    return TangentFrame(Direction.from_array(n), Direction.from_array(t), Direction.from_array(b))


def rotate_about_normal(frame: TangentFrame, angle: float) -> TangentFrame:
    c, s = math.cos(angle), math.sin(angle)
    t, b = frame.tangent.as_array(), frame.bitangent.as_array()
    t_new = c * t + s * b
    b_new = c * b - s * t
    # renormalize against drift, keeping the normal untouched
    t_new /= np.linalg.norm(t_new)
    b_new /= np.linalg.norm(b_new)
    return TangentFrame(frame.normal, Direction.from_array(t_new), Direction.from_array(b_new))


def _check(key, value, ok, what):
    if not ok:
        raise ValidationError(key, f"{value!r} {what}")


@dataclass(frozen=True)
class Lambertian:
    albedo: float

    def __post_init__(self):
        _check("albedo", self.albedo, 0.0 <= self.albedo <= 1.0, "not in [0, 1]")

    def local(self, wi: np.ndarray, wo: np.ndarray) -> np.ndarray:
        return np.full(np.broadcast(wi[..., 2], wo[..., 2]).shape, self.albedo / math.pi)


@dataclass(frozen=True)
class BlinnPhong:
    diffuse: float
    specular: float
    exponent: float

    def __post_init__(self):
        _check("diffuse", self.diffuse, self.diffuse >= 0.0, "is negative")
        _check("specular", self.specular, self.specular >= 0.0, "is negative")
        _check("exponent", self.exponent, self.exponent >= 1.0, "is below 1")

    def local(self, wi, wo):
        h = wi + wo
        cos_h = h[..., 2] / np.linalg.norm(h, axis=-1)
        lobe = (self.exponent + 2.0) / (2.0 * math.pi) * cos_h**self.exponent
        return self.diffuse / math.pi + self.specular * lobe


@dataclass(frozen=True)
class WardAnisotropic:
    """Ward's elliptical-Gaussian model; ``alpha_x`` acts along the tangent."""

    diffuse: float
    specular: float
    alpha_x: float
    alpha_y: float

    def __post_init__(self):
        _check("diffuse", self.diffuse, self.diffuse >= 0.0, "is negative")
        _check("specular", self.specular, self.specular >= 0.0, "is negative")
        _check("alpha_x", self.alpha_x, self.alpha_x > 0.0, "must be positive")
        _check("alpha_y", self.alpha_y, self.alpha_y > 0.0, "must be positive")

    def local(self, wi, wo):
        h = wi + wo
        tx = h[..., 0] / self.alpha_x
        ty = h[..., 1] / self.alpha_y
        expo = -(tx * tx + ty * ty) / (h[..., 2] * h[..., 2])
        norm = 4.0 * math.pi * self.alpha_x * self.alpha_y * np.sqrt(wi[..., 2] * wo[..., 2])
        return self.diffuse / math.pi + self.specular * np.exp(expo) / norm


BrdfModel = Union[Lambertian, BlinnPhong, WardAnisotropic]


def eval_brdf(model: BrdfModel, frame: TangentFrame, omega_in: Direction, omega_out: Direction) -> float:
    """f_r(omega_in; omega_out) for unit directions pointing away from the surface."""
    m = frame.matrix()
    wi = m @ omega_in.as_array()
    wo = m @ omega_out.as_array()
    if wi[2] <= 0.0 or wo[2] <= 0.0:
        raise BelowHorizon("direction at or below the tangent plane")
    return float(model.local(wi, wo))


def eval_brdf_many(model: BrdfModel, normals, tangents, bitangents, omega_in, omega_out) -> np.ndarray:
    """Vectorized ``eval_brdf`` over ``(N, 3)`` arrays of frames and directions.

    Entries with either direction below the horizon are returned as 0.
    """
    def to_local(w):
        return np.stack(
            [np.sum(w * tangents, axis=-1), np.sum(w * bitangents, axis=-1), np.sum(w * normals, axis=-1)],
            axis=-1,
        )

    wi, wo = to_local(np.asarray(omega_in)), to_local(np.asarray(omega_out))
    above = (wi[..., 2] > 0.0) & (wo[..., 2] > 0.0)
    out = np.zeros(above.shape)
    if np.any(above):
        out[above] = model.local(wi[above], wo[above])
    return out
