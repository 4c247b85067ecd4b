"""Binary PGM (P5) and PPM (P6) images with maxval 255."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PnmError(ValueError):
    pass


def encode_pnm(pixels: np.ndarray) -> bytes:
    """Encode a ``(C, H, W)`` uint8 array; C must be 1 (P5) or 3 (P6)."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[0] not in (1, 3):
        raise PnmError(f"need (1|3, H, W) pixels, got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise PnmError("pixels must be uint8")
    c, h, w = pixels.shape
    magic = b"P5" if c == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (w, h)
    return header + np.ascontiguousarray(np.moveaxis(pixels, 0, -1)).tobytes()


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    toks: list[bytes] = []
    i = 0
    while len(toks) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise PnmError("truncated header")
        toks.append(data[start:i])
    # exactly one whitespace byte separates the header from the raster
    return toks, i + 1


def decode_pnm(data: bytes) -> np.ndarray:
    toks, off = _tokens(data, 4)
    magic = toks[0]
    if magic not in (b"P5", b"P6"):
        raise PnmError(f"unsupported format {magic!r}")
    try:
        w, h, maxval = (int(t) for t in toks[1:])
    except ValueError as exc:
        raise PnmError("malformed header") from exc
    if maxval != 255:
        raise PnmError(f"only maxval 255 is supported, got {maxval}")
    c = 1 if magic == b"P5" else 3
    n = w * h * c
    raster = data[off : off + n]
    if len(raster) != n:
        raise PnmError(f"raster has {len(raster)} bytes, expected {n}")
    return np.moveaxis(np.frombuffer(raster, dtype=np.uint8).reshape(h, w, c), -1, 0).copy()


def write_pnm(path, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_pnm(pixels))


def read_pnm(path) -> np.ndarray:
    return decode_pnm(Path(path).read_bytes())


def pnm_suffix(channels: int) -> str:
    return ".pgm" if channels == 1 else ".ppm"
