"""Reconstruction error metrics and the constant-reflectance baseline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoOverlap, ValidationError
from .reconstruct import DEFAULT_PARAMS, IrradianceImage, ReconstructionParams, _reconstruct
from .transport import TransportMatrix
from .types import HeightField


@dataclass(frozen=True)
class EvalReport:
    rms_percent: float
    mean_abs_error: float
    valid_fraction: float
    per_row_rms: tuple
    baseline_rms_percent: float | None = None

    def to_json(self) -> str:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        payload = {
            "rms_percent": num(self.rms_percent),
            "mean_abs_error": num(self.mean_abs_error),
            "valid_fraction": num(self.valid_fraction),
            "per_row_rms": [num(x) for x in self.per_row_rms],
            "baseline_rms_percent": num(self.baseline_rms_percent),
        }
        # repr-precision floats; NaN rows (no overlap) become null
        return json.dumps(payload, indent=2) + "\n"


def rms_error(recon: HeightField, truth: HeightField) -> EvalReport:
    """RMS depth error as a percentage of the truth's depth range.

    Only cells valid in both inputs count. ``valid_fraction`` is the share
    of truth-valid cells that the reconstruction also covers.
    """
    if (recon.width, recon.height) != (truth.width, truth.height):
        raise DimensionMismatch(
            f"reconstruction is {recon.width}x{recon.height}, truth is {truth.width}x{truth.height}")
    joint = recon.valid & truth.valid
    if not joint.any():
        raise NoOverlap("no cell is valid in both depth maps")
    tz = truth.z[truth.valid]
    span = float(tz.max() - tz.min())
    diff = np.where(joint, recon.z - truth.z, 0.0)
    rms = math.sqrt(float(np.sum(diff**2)) / joint.sum())
    mae = float(np.sum(np.abs(diff))) / joint.sum()
    counts = joint.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_row = np.sqrt(np.sum(diff**2, axis=1) / counts)
    per_row = np.where(counts > 0, per_row, np.nan)
    # a flat truth has no range; fall back to absolute error so 0 stays 0
    rms_percent = 100.0 * rms / span if span > 0 else (0.0 if rms == 0 else math.inf)
    return EvalReport(rms_percent, mae, float(joint.sum() / truth.valid.sum()), tuple(per_row.tolist()))


def lambertian_baseline(e: IrradianceImage, t: TransportMatrix, rig, constant_fr: float,
                        params: ReconstructionParams = DEFAULT_PARAMS) -> HeightField:
    """Same pipeline with the transport scalar replaced by ``constant_fr``.

    Seeds are still triangulated from ``t``; only the shading inversion
    assumes constant reflectance. ``constant_fr = 0`` masks every pixel.
    """
    if not (math.isfinite(constant_fr) and constant_fr >= 0):
        raise ValidationError("constant_fr", "must be finite and >= 0")
    return _reconstruct(e, t, rig, params, constant_fr=constant_fr)
