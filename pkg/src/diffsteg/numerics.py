"""Grid helpers, seeded Gaussian sampling and the orthonormal 2D DCT.

A grid is a float64 ``numpy.ndarray`` of shape ``(channels, height, width)``.
Most functions here also accept extra leading batch axes; the last three axes
are always ``(C, H, W)``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

Grid = np.ndarray
Dims = tuple[int, int, int]


def check_dims(dims: Sequence[int]) -> Dims:
    """Validate a ``(C, H, W)`` triple and return it as a tuple of ints."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError(f"dims must be (channels, height, width), got {dims}")
    if any(d <= 0 for d in dims):
        raise ValueError(f"dims must all be positive, got {dims}")
    return dims  # type: ignore[return-value]


def as_grid(x, dims: Sequence[int] | None = None) -> Grid:
    """Coerce ``x`` to a finite float64 array with at least three axes."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim < 3:
        raise ValueError(f"grid needs (C, H, W) axes, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("grid is empty")
    if dims is not None and arr.shape[-3:] != tuple(dims):
        raise ValueError(f"grid dims {arr.shape[-3:]} do not match {tuple(dims)}")
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError("grid contains NaN or Inf")
    return arr


def parse_dims(text: str) -> Dims:
    """Parse ``"CxHxW"`` (e.g. ``"1x16x16"``)."""
    parts = text.lower().split("x")
    try:
        return check_dims([int(p) for p in parts])
    except ValueError as exc:
        raise ValueError(f"bad dims {text!r}, expected CxHxW") from exc


class SeededRng:
    """Single-owner random stream: PCG64 bit generator with NumPy's
    ziggurat standard-normal transform.

    Identical seeds give identical streams for a given NumPy release.
    Not safe to share between threads.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        """Uniform integers in ``[low, high]`` inclusive."""
        return self._gen.integers(low, high, size=size, endpoint=True)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def bits(self, n: int) -> np.ndarray:
        return self._gen.integers(0, 2, size=n, dtype=np.uint8)

    def spawn(self, key: int) -> "SeededRng":
        """Child stream derived deterministically from this seed and ``key``."""
        return SeededRng(int(np.random.SeedSequence([self.seed, key]).generate_state(1, np.uint64)[0]))


def sample_gaussian(rng: SeededRng, dims: Sequence[int]) -> Grid:
    """I.i.d. standard-normal grid of shape ``dims``."""
    return rng.normal(check_dims(dims))


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``M`` with ``M @ v`` the transform of ``v``."""
    if n <= 0:
        raise ValueError("transform size must be positive")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0, :] = np.sqrt(1.0 / n)
    m.setflags(write=False)
    return m


def dct2(x) -> Grid:
    """Full-frame orthonormal 2D DCT-II of every channel (rows, then columns)."""
    x = as_grid(x)
    mh = dct_matrix(x.shape[-2])
    mw = dct_matrix(x.shape[-1])
    rows = x @ mw.T
    return mh @ rows


def idct2(c) -> Grid:
    """Inverse of :func:`dct2` (orthonormal DCT-III per channel)."""
    c = as_grid(c)
    mh = dct_matrix(c.shape[-2])
    mw = dct_matrix(c.shape[-1])
    rows = c @ mw
    return mh.T @ rows
