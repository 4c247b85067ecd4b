"""Small synthetic image sets in [-1, 1] for desk-scale training."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .numerics import SeededRng, check_dims

KINDS = ("blobs", "gradients", "checkers")


def _blobs(rng: SeededRng, c: int, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.empty((c, h, w))
    img[:] = rng.uniform(-0.5, 0.1, size=(c, 1, 1))
    for _ in range(int(rng.integers(1, 3))):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(1.5, 4.0) * max(h, w) / 16
        amp = rng.uniform(-0.7, 0.9, size=(c, 1, 1))
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    return img


def _gradients(rng: SeededRng, c: int, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    yy = yy / max(h - 1, 1) - 0.5
    xx = xx / max(w - 1, 1) - 0.5
    theta = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    slope = rng.uniform(0.8, 1.6, size=(c, 1, 1)) * (2.0 * rng.bits(c) - 1.0)[:, None, None]
    offset = rng.uniform(-0.3, 0.3, size=(c, 1, 1))
    return offset + slope * ramp


def _checkers(rng: SeededRng, c: int, h: int, w: int) -> np.ndarray:
    cell = int(rng.integers(1, 4))
    oy, ox = int(rng.integers(0, cell - 1)), int(rng.integers(0, cell - 1))
    yy, xx = np.mgrid[0:h, 0:w]
    mask = (((yy + oy) // cell + (xx + ox) // cell) % 2).astype(np.float64)
    lo = rng.uniform(-0.7, 0.0, size=(c, 1, 1))
    hi = rng.uniform(0.0, 0.7, size=(c, 1, 1))
    return lo + (hi - lo) * mask


def synth_dataset(
    kind: str,
    count: int,
    dims: Sequence[int],
    seed: int = 0,
    grain: float = 0.3,
) -> np.ndarray:
    """``count`` images of shape ``dims`` with values clamped to [-1, 1].

    ``kind`` is ``"blobs"`` (Gaussian bumps on a flat background),
    ``"gradients"`` (linear ramps at a random angle) or ``"checkers"``
    (two-level checkerboards with 1-3 px cells). Every image also gets
    i.i.d. Gaussian grain of std ``grain``; the grain keeps every DCT
    frequency populated in the training data, which is what lets
    high-frequency sign bits survive the generate/quantize/invert round trip.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {KINDS}")
    if count < 1:
        raise ValueError("count must be at least 1")
    if grain < 0:
        raise ValueError("grain must be non-negative")
    c, h, w = check_dims(dims)
    rng = SeededRng(seed)
    make = {"blobs": _blobs, "gradients": _gradients, "checkers": _checkers}[kind]
    out = np.empty((count, c, h, w))
    for i in range(count):
        img = make(rng, c, h, w)
        if grain:
            img = img + grain * rng.normal((c, h, w))
        out[i] = np.clip(img, -1.0, 1.0)
    return out
