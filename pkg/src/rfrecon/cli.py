"""``rfrecon`` command-line front end.

Every subcommand reads its inputs, computes, and writes each output
atomically. Failures print ``ErrorClass: message`` on one stderr line and
exit with 2 (bad input), 3 (dimension mismatch), 4 (numerical failure) or
5 (I/O).
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .calibration import board_view, calibrate_rig, random_board_poses
from .config import parse_params, parse_rig, parse_scene, write_rig
from .errors import (
    DimensionMismatch,
    InputError,
    NumericalFailure,
    ParseError,
    ReflectanceError,
    StorageError,
    ValidationError,
)
from .evaluate import lambertian_baseline, rms_error
from .geometry import CheckerboardSpec, rectify
from .io import atomic_write, read_bytes, read_pfm, read_pgm, to_display, write_pfm, write_pgm
from .reconstruct import DEFAULT_PARAMS, IrradianceImage, forward_irradiance, reconstruct_depthmap, render_depth
from .transport import build_transport_matrix, dual_photograph, read_tmat, write_tmat
from .types import HeightField, LightFieldVector

EXIT_INPUT, EXIT_DIMENSION, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4, 5


def _text(path) -> str:
    try:
        return read_bytes(path).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(1, exc.start + 1, f"{path} is not valid UTF-8") from None


def _rig(path):
    return rectify(parse_rig(_text(path)))


def _params(path):
    return parse_params(_text(path)) if path else DEFAULT_PARAMS


def _size(text: str, key: str):
    try:
        w, h = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise ValidationError(key, f"expected WIDTHxHEIGHT, got {text!r}") from None
    if w < 1 or h < 1:
        raise ValidationError(key, "dimensions must be positive")
    return w, h


def _board_spec(text: str) -> CheckerboardSpec:
    parts = text.lower().split("x")
    try:
        rows, cols, size = int(parts[0]), int(parts[1]), float(parts[2])
        if len(parts) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise ValidationError("spec", f"expected ROWSxCOLSxSIZE, got {text!r}") from None
    return CheckerboardSpec(rows, cols, size)


def cmd_simulate(args):
    scene = parse_scene(_text(args.scene), os.path.dirname(os.path.abspath(args.scene))).build()
    rr = _rig(args.rig)
    params = _params(args.params)
    t = build_transport_matrix(scene, rr.rectified_rig)
    outputs = [(write_tmat, args.out, t)]
    if args.irradiance:
        e = forward_irradiance(scene, rr, t, params)
        outputs.append((write_pfm, args.irradiance, e.e))
    if args.truth:
        outputs.append((write_pfm, args.truth, render_depth(scene, rr).z))
    for write, path, value in outputs:
        write(path, value)


def cmd_dualphoto(args):
    t = read_tmat(args.tmat)
    illum = read_pgm(args.illum)
    if illum.size != t.rows:
        raise DimensionMismatch(f"illumination has {illum.size} pixels, transport has {t.rows} rows")
    if args.rig:
        proj = _rig(args.rig).projector
        w, h = proj.width, proj.height
    elif args.proj_size:
        w, h = _size(args.proj_size, "proj-size")
    else:
        w = h = int(round(np.sqrt(t.cols)))
    if w * h != t.cols:
        raise DimensionMismatch(f"projector image {w}x{h} does not match {t.cols} transport columns")
    out = dual_photograph(t, LightFieldVector(illum.reshape(-1) / 255.0))
    write_pgm(args.out, to_display(out.values.reshape(h, w)))


def _read_view(path):
    rows = [line.split() for line in _text(path).splitlines() if line.strip() and not line.startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ParseError(1, 1, f"{path}: first line must be 'WIDTH HEIGHT'")
    try:
        size = (int(rows[0][0]), int(rows[0][1]))
    except ValueError:
        raise ParseError(1, 1, f"{path}: image size must be integers") from None
    pts = []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise ParseError(i, 1, f"{path}: expected 'u v'")
        try:
            pts.append((float(r[0]), float(r[1])))
        except ValueError:
            raise ParseError(i, 1, f"{path}: corner coordinates must be numbers") from None
    return size, np.array(pts)


def cmd_calibrate(args):
    spec = _board_spec(args.spec)
    if not os.path.isdir(args.views):
        raise StorageError(f"{args.views} is not a directory")
    cams = [_read_view(p) for p in sorted(glob.glob(os.path.join(args.views, "camera_*.txt")))]
    projs = [_read_view(p) for p in sorted(glob.glob(os.path.join(args.views, "projector_*.txt")))]
    if not cams or not projs:
        raise ValidationError("views", "need camera_*.txt and projector_*.txt files")
    rig = calibrate_rig([v for _, v in cams], [v for _, v in projs], spec, cams[0][0], projs[0][0])
    atomic_write(args.out, write_rig(rig).encode("utf-8"))


def _format_view(size, pts) -> str:
    lines = [f"{size[0]} {size[1]}"] + [f"{float(u)!r} {float(v)!r}" for u, v in pts]
    return "\n".join(lines) + "\n"


def cmd_make_views(args):
    rig = parse_rig(_text(args.rig))
    spec = _board_spec(args.spec)
    rng = np.random.default_rng(args.seed)
    poses = random_board_poses(spec, args.count, rng, distance=args.distance)
    os.makedirs(args.out, exist_ok=True)
    for i, pose in enumerate(poses):
        for name, dev in (("camera", rig.camera), ("projector", rig.projector)):
            pts = board_view(dev, spec, pose)
            if args.noise > 0:
                pts = pts + rng.normal(0.0, args.noise, size=pts.shape)
            path = os.path.join(args.out, f"{name}_{i:02d}.txt")
            atomic_write(path, _format_view((dev.width, dev.height), pts).encode("utf-8"))


def _irradiance(path, cam):
    img = read_pfm(path).astype(np.float64)
    if img.shape != (cam.height, cam.width):
        raise DimensionMismatch(f"irradiance is {img.shape[1]}x{img.shape[0]}, camera is {cam.width}x{cam.height}")
    return IrradianceImage(cam.width, cam.height, img, np.isfinite(img))


def cmd_reconstruct(args):
    t = read_tmat(args.tmat)
    rr = _rig(args.rig)
    e = _irradiance(args.irradiance, rr.camera)
    depth = reconstruct_depthmap(e, t, rr, _params(args.params))
    if not depth.valid.any():
        raise NumericalFailure("reconstruction produced no valid pixel")
    write_pfm(args.out, depth.z)


def _depth_map(path) -> HeightField:
    z = read_pfm(path).astype(np.float64)
    return HeightField(z.shape[1], z.shape[0], 1.0, 1.0, z)


def cmd_evaluate(args):
    recon, truth = _depth_map(args.recon), _depth_map(args.truth)
    report = rms_error(recon, truth)
    if args.baseline_fr is not None:
        missing = [k for k in ("irradiance", "tmat", "rig") if getattr(args, k) is None]
        if missing:
            raise ValidationError("baseline-fr", "also needs --" + ", --".join(missing))
        rr = _rig(args.rig)
        cam = rr.camera
        if (cam.width, cam.height) != (truth.width, truth.height):
            raise DimensionMismatch("rig camera does not match the depth maps")
        b = lambertian_baseline(_irradiance(args.irradiance, cam), read_tmat(args.tmat), rr,
                                args.baseline_fr, _params(args.params))
        b_rms = rms_error(b, truth).rms_percent if b.valid.any() else float("nan")
        report = replace(report, baseline_rms_percent=b_rms)
    atomic_write(args.out, report.to_json().encode("utf-8"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfrecon", description="Reflectance-field depth reconstruction toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="build the transport matrix (and optional images) for a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--rig", required=True)
    s.add_argument("--out", required=True, help="output .tmat")
    s.add_argument("--irradiance", help="output irradiance PFM")
    s.add_argument("--truth", help="output ground-truth depth PFM")
    s.add_argument("--params", help="reconstruction parameter file (foreshortening choice)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("dualphoto", help="projector-view image from camera-side illumination")
    s.add_argument("--tmat", required=True)
    s.add_argument("--illum", required=True, help="camera-size PGM")
    s.add_argument("--out", required=True, help="output PGM")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--rig", help="rig file giving the projector size")
    g.add_argument("--proj-size", help="projector size as WIDTHxHEIGHT")
    s.set_defaults(func=cmd_dualphoto)

    s = sub.add_parser("calibrate", help="planar calibration of camera and projector")
    s.add_argument("--views", required=True, help="directory of camera_*.txt / projector_*.txt")
    s.add_argument("--spec", required=True, help="board as ROWSxCOLSxSIZE (inner corners)")
    s.add_argument("--out", required=True, help="output rig file")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("make-views", help="synthetic board corner views for calibrate")
    s.add_argument("--rig", required=True)
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--count", type=int, default=5)
    s.add_argument("--distance", type=float, default=10.0)
    s.add_argument("--noise", type=float, default=0.0, help="corner noise std-dev in pixels")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_make_views)

    s = sub.add_parser("reconstruct", help="depth map from irradiance and transport")
    s.add_argument("--tmat", required=True)
    s.add_argument("--irradiance", required=True)
    s.add_argument("--rig", required=True)
    s.add_argument("--out", required=True, help="output depth PFM")
    s.add_argument("--params")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("evaluate", help="RMS report against ground truth")
    s.add_argument("--recon", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--out", required=True, help="output JSON report")
    s.add_argument("--baseline-fr", type=float, help="constant reflectance for the baseline run")
    s.add_argument("--irradiance")
    s.add_argument("--tmat")
    s.add_argument("--rig")
    s.add_argument("--params")
    s.set_defaults(func=cmd_evaluate)
    return p


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, DimensionMismatch):
        return EXIT_DIMENSION
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL
    return EXIT_IO


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ReflectanceError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
