"""PFM/PGM image files and atomic output writes."""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .errors import StorageError


def atomic_write(path, payload: bytes) -> None:
    """Write ``payload`` to a temp file beside ``path``, then rename over it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise StorageError(f"cannot create output in {directory}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise StorageError(f"cannot write {path}: {exc}") from exc


def read_bytes(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc


def _header_tokens(data: bytes, count: int):
    """Split the first ``count`` whitespace-separated header tokens off ``data``."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise StorageError("truncated image header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def encode_pfm(image: np.ndarray) -> bytes:
    """Grayscale little-endian PFM, rows stored bottom-to-top. NaN marks invalid."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PFM writer expects a 2-D array")
    h, w = img.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    return header + np.ascontiguousarray(img[::-1], dtype="<f4").tobytes()


def decode_pfm(data: bytes) -> np.ndarray:
    tokens, pos = _header_tokens(data, 4)
    if tokens[0] != b"Pf":
        raise StorageError(f"not a grayscale PFM (magic {tokens[0]!r})")
    try:
        w, h, scale = int(tokens[1]), int(tokens[2]), float(tokens[3])
    except ValueError as exc:
        raise StorageError("malformed PFM header") from exc
    dtype = "<f4" if scale < 0 else ">f4"
    raster = data[pos:]
    if len(raster) != 4 * w * h:
        raise StorageError(f"PFM raster has {len(raster)} bytes, expected {4 * w * h}")
    return np.frombuffer(raster, dtype=dtype).reshape(h, w)[::-1].astype(np.float32)


def write_pfm(path, image) -> None:
    atomic_write(path, encode_pfm(image))


def read_pfm(path) -> np.ndarray:
    return decode_pfm(read_bytes(path))


def encode_pgm(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("PGM writer expects a 2-D uint8 array")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    tokens, pos = _header_tokens(data, 4)
    if tokens[0] != b"P5":
        raise StorageError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise StorageError("malformed PGM header") from exc
    if maxval != 255:
        raise StorageError(f"only maxval 255 is supported, got {maxval}")
    raster = data[pos:]
    if len(raster) != w * h:
        raise StorageError(f"PGM raster has {len(raster)} bytes, expected {w * h}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, image) -> None:
    atomic_write(path, encode_pgm(image))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(read_bytes(path))


def to_display(values: np.ndarray) -> np.ndarray:
    """Scale nonnegative data so its maximum maps to 255."""
    v = np.nan_to_num(np.asarray(values, dtype=np.float64), nan=0.0)
    peak = v.max() if v.size else 0.0
    if peak <= 0:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.clip(np.floor(v / peak * 255.0 + 0.5), 0, 255).astype(np.uint8)
