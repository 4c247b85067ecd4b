"""Sign coding of bits in DCT coefficients, byte/bit packing, and the
float <-> 8-bit pixel boundary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import Dims, Grid, as_grid, check_dims, dct2, idct2


@dataclass(frozen=True)
class EmbedLayout:
    """Where bit ``i`` lives: coefficient ``permutation[i]`` of the flattened
    (channel-major, row-major) coefficient tensor; identity when None."""

    amplitude: float = 1.0
    permutation: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.permutation is not None:
            p = np.asarray(self.permutation)
            if not np.array_equal(np.sort(p), np.arange(p.size)):
                raise ValueError("permutation must be a permutation of 0..n-1")

    def _perm(self, n: int) -> np.ndarray | None:
        if self.permutation is None:
            return None
        if len(self.permutation) != n:
            raise ValueError(f"layout permutation covers {len(self.permutation)} positions, grid has {n}")
        return np.asarray(self.permutation)


def capacity(dims: Sequence[int]) -> int:
    c, h, w = check_dims(dims)
    return c * h * w


def as_bits(d) -> np.ndarray:
    bits = np.asarray(d)
    if bits.ndim != 1:
        bits = bits.ravel()
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    return bits.astype(np.uint8)


def embed(d, dims: Sequence[int], layout: EmbedLayout = EmbedLayout()) -> Grid:
    """Stego latent whose DCT coefficients are ``+amplitude`` for 1-bits and
    ``-amplitude`` for 0-bits."""
    dims = check_dims(dims)
    bits = as_bits(d)
    n = capacity(dims)
    if bits.size != n:
        raise ValueError(f"payload has {bits.size} bits, grid {dims} holds exactly {n}")
    signs = 2.0 * bits - 1.0
    perm = layout._perm(n)
    coeff = np.empty(n)
    if perm is None:
        coeff[:] = signs
    else:
        coeff[perm] = signs
    return idct2(layout.amplitude * coeff.reshape(dims))


def extract(z, layout: EmbedLayout = EmbedLayout()) -> np.ndarray:
    """Bits read from coefficient signs: ``ceil((sign(c) + 1) / 2)``.

    A coefficient of exactly zero has sign 0 and therefore decodes to 1.
    """
    coeff = dct2(as_grid(z)).reshape(-1)
    bits = np.ceil((np.sign(coeff) + 1.0) / 2.0).astype(np.uint8)
    perm = layout._perm(coeff.size)
    return bits if perm is None else bits[perm]


def bytes_to_bits(data: bytes, n_bits: int) -> np.ndarray:
    """First ``n_bits`` bits of ``data``, most significant bit of each byte first."""
    need = (n_bits + 7) // 8
    if len(data) < need:
        raise ValueError(f"payload of {n_bits} bits requires {need} bytes, got {len(data)}")
    return np.unpackbits(np.frombuffer(data[:need], dtype=np.uint8))[:n_bits]


def bits_to_bytes(bits) -> bytes:
    """Pack bits MSB-first, zero-padding the final byte."""
    return np.packbits(as_bits(bits)).tobytes()


@dataclass
class StegoImage:
    """8-bit image ``pixels`` of shape (C, H, W) plus how it was produced."""

    pixels: np.ndarray
    S: int | None = None
    seed: int | None = None
    schedule_id: str | None = None

    @property
    def dims(self) -> Dims:
        return tuple(self.pixels.shape)  # type: ignore[return-value]


def _round_half_away(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def quantize(x, **meta) -> StegoImage:
    """Map [-1, 1] to {0..255}: ``clamp(round((x + 1) * 127.5), 0, 255)``,
    rounding halves away from zero."""
    x = as_grid(x)
    q = np.clip(_round_half_away((x + 1.0) * 127.5), 0, 255)
    return StegoImage(q.astype(np.uint8), **meta)


def dequantize(q) -> Grid:
    """``q / 127.5 - 1`` for 8-bit pixels (a StegoImage or an integer array)."""
    pixels = q.pixels if isinstance(q, StegoImage) else np.asarray(q)
    if pixels.dtype.kind not in "ui":
        if not np.all(pixels == np.round(pixels)):
            raise ValueError("pixel values must be integers")
    if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    return pixels.astype(np.float64) / 127.5 - 1.0
