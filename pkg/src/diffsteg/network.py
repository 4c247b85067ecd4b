"""Compact dense noise predictor with hand-written backpropagation.

Layout (D = C*H*W, E = time_embed_dim, K = hidden_dim)::

    h0 = [vec(x_t), emb(t)]                 (D + E)
    a1 = silu(h0 @ W1 + b1)                 (K)
    a2 = silu(a1 @ W2 + b2)                 (K)
    v  = a2 @ W3 + b3                       (D)
    eps_hat = sqrt(1 - abar_t) x_t + sqrt(abar_t) v

The last line is a fixed, parameter-free skip. ``v`` regresses the velocity
``sqrt(abar_t) eps - sqrt(1 - abar_t) x_0``, for which the identity above is
exact, so near t = T the prediction is dominated by ``x_t`` itself and errors
in ``v`` are damped by ``sqrt(abar_t)``.
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import Dims, SeededRng, check_dims
from .schedule import NoiseSchedule

MAGIC = b"GSDW"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIIII")

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


class CheckpointError(ValueError):
    pass


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _silu(z):
    return z * _sigmoid(z)


def _silu_grad(z):
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


def time_embedding(t, T: int, dim: int = 16) -> np.ndarray:
    """Sinusoidal features of integer steps ``t``.

    Angular frequencies are geometric from 1 down to 1/T (half sines, half
    cosines). Returns shape ``(len(t), dim)``.
    """
    if dim % 2 or dim < 2:
        raise ValueError("time_embed_dim must be a positive even number")
    half = dim // 2
    expo = np.arange(half) / max(half - 1, 1)
    freqs = float(T) ** (-expo)
    ang = np.atleast_1d(np.asarray(t, dtype=np.float64))[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class TinyDenoiser:
    def __init__(
        self,
        dims: Sequence[int],
        schedule: NoiseSchedule,
        time_embed_dim: int = 16,
        hidden_dim: int = 256,
        seed: int = 0,
    ):
        self.dims: Dims = check_dims(dims)
        self.schedule = schedule
        self.time_embed_dim = int(time_embed_dim)
        self.hidden_dim = int(hidden_dim)
        if self.time_embed_dim % 2 or self.time_embed_dim < 2:
            raise ValueError("time_embed_dim must be a positive even number")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be positive")
        rng = SeededRng(seed)
        d, e, k = self.size, self.time_embed_dim, self.hidden_dim
        self.params = [
            rng.normal((d + e, k)) / np.sqrt(d + e),
            np.zeros(k),
            rng.normal((k, k)) / np.sqrt(k),
            np.zeros(k),
            0.1 * rng.normal((k, d)) / np.sqrt(k),
            np.zeros(d),
        ]

    @property
    def size(self) -> int:
        c, h, w = self.dims
        return c * h * w

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def param_shapes(self) -> list[tuple[int, ...]]:
        d, e, k = self.size, self.time_embed_dim, self.hidden_dim
        return [(d + e, k), (k,), (k, k), (k,), (k, d), (d,)]

    # -- forward / backward -------------------------------------------------

    def _flatten(self, x) -> tuple[np.ndarray, tuple[int, ...]]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-3:] != self.dims:
            raise ValueError(f"input dims {x.shape[-3:]} do not match model dims {self.dims}")
        lead = x.shape[:-3]
        return x.reshape(-1, self.size), lead

    def _forward(self, xf: np.ndarray, t: np.ndarray):
        W1, b1, W2, b2, W3, b3 = self.params
        h0 = np.concatenate([xf, time_embedding(t, self.schedule.T, self.time_embed_dim)], axis=1)
        z1 = h0 @ W1 + b1
        a1 = _silu(z1)
        z2 = a1 @ W2 + b2
        a2 = _silu(z2)
        v = a2 @ W3 + b3
        ab = self.schedule.abar_table(t)[:, None]
        out = np.sqrt(1.0 - ab) * xf + np.sqrt(ab) * v
        return out, (h0, z1, a1, z2, a2, ab)

    def predict(self, x, t: int):
        xf, lead = self._flatten(x)
        tt = np.full(xf.shape[0], int(t))
        out, _ = self._forward(xf, tt)
        return out.reshape(lead + self.dims)

    def loss_and_grad(self, xt, t, eps) -> tuple[float, list[np.ndarray]]:
        """Batch-mean squared error and its gradient w.r.t. every parameter.

        ``xt`` and ``eps`` are ``(N, C, H, W)``; ``t`` is an int array of length N.
        """
        xf, _ = self._flatten(xt)
        ef = np.asarray(eps, dtype=np.float64).reshape(xf.shape)
        t = np.broadcast_to(np.asarray(t), (xf.shape[0],))
        out, (h0, z1, a1, z2, a2, ab) = self._forward(xf, t)
        r = out - ef
        loss = float(np.mean(r * r))
        gv = (2.0 / r.size) * r * np.sqrt(ab)
        W2, W3 = self.params[2], self.params[4]
        gW3 = a2.T @ gv
        gb3 = gv.sum(axis=0)
        gz2 = (gv @ W3.T) * _silu_grad(z2)
        gW2 = a1.T @ gz2
        gb2 = gz2.sum(axis=0)
        gz1 = (gz2 @ W2.T) * _silu_grad(z1)
        gW1 = h0.T @ gz1
        gb1 = gz1.sum(axis=0)
        return loss, [gW1, gb1, gW2, gb2, gW3, gb3]

    # -- serialization --------------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        c, h, w = self.dims
        buf.write(_HEADER.pack(MAGIC, FORMAT_VERSION, c, h, w, self.time_embed_dim, self.hidden_dim))
        for p in self.params:
            buf.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, schedule: NoiseSchedule) -> "TinyDenoiser":
        if len(data) < _HEADER.size:
            raise CheckpointError("checkpoint truncated")
        magic, version, c, h, w, e, k = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CheckpointError("not a GSDW checkpoint")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        model = cls((c, h, w), schedule, time_embed_dim=e, hidden_dim=k)
        off = _HEADER.size
        params = []
        for shape in model.param_shapes():
            n = int(np.prod(shape))
            chunk = data[off : off + 8 * n]
            if len(chunk) != 8 * n:
                raise CheckpointError("checkpoint truncated")
            params.append(np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(shape))
            off += 8 * n
        if off != len(data):
            raise CheckpointError("trailing bytes after weights")
        model.params = params
        return model

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path, schedule: NoiseSchedule) -> "TinyDenoiser":
        return cls.from_bytes(Path(path).read_bytes(), schedule)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()
