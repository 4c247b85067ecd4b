"""Noise predictors: the interface, closed-form oracles, and the DDPM loss."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from .numerics import Grid, as_grid
from .schedule import NoiseSchedule


@runtime_checkable
class NoisePredictor(Protocol):
    """Anything with ``predict(x, t) -> grid`` of the same shape as ``x``.

    ``x`` may carry leading batch axes; ``t`` is a single step index.
    """

    def predict(self, x: Grid, t: int) -> Grid: ...


class AnalyticOracle:
    """Closed-form predictor used as an exact test instrument.

    mode ``"zero"``      -> 0
    mode ``"constant"``  -> a fixed grid (or scalar) ``c``
    mode ``"linear"``    -> ``A @ vec(x) + b`` on the flattened ``(C, H, W)`` axes
    """

    def __init__(self, mode: str = "zero", c=0.0, A=None, b=None):
        if mode not in ("zero", "constant", "linear"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        self.mode = mode
        self.c = np.asarray(c, dtype=np.float64)
        if mode == "linear":
            if A is None:
                raise ValueError("linear oracle needs a matrix A")
            A = np.asarray(A, dtype=np.float64)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValueError("A must be square")
            self.A = A
            self.b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=np.float64).ravel()
        else:
            self.A = None
            self.b = None

    @classmethod
    def zero(cls) -> "AnalyticOracle":
        return cls("zero")

    @classmethod
    def constant(cls, c) -> "AnalyticOracle":
        return cls("constant", c=c)

    @classmethod
    def linear(cls, A, b=None) -> "AnalyticOracle":
        return cls("linear", A=A, b=b)

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant in x (spectral norm of ``A`` for the linear mode)."""
        if self.mode != "linear":
            return 0.0
        return float(np.linalg.norm(self.A, 2))

    def predict(self, x: Grid, t: int) -> Grid:
        x = np.asarray(x, dtype=np.float64)
        if self.mode == "zero":
            return np.zeros_like(x)
        if self.mode == "constant":
            return np.broadcast_to(self.c, x.shape).astype(np.float64)
        lead = x.shape[:-3]
        flat = x.reshape(lead + (-1,))
        if flat.shape[-1] != self.A.shape[0]:
            raise ValueError("grid size does not match oracle matrix")
        return (flat @ self.A.T + self.b).reshape(x.shape)

    def __repr__(self):
        return f"AnalyticOracle({self.mode!r})"


def forward_diffuse(x0, t: int, eps, schedule: NoiseSchedule) -> Grid:
    """Closed-form noising: ``sqrt(abar_t) x0 + sqrt(1 - abar_t) eps``."""
    x0 = as_grid(x0)
    eps = as_grid(eps)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 {x0.shape} and eps {eps.shape} differ in shape")
    ab = schedule.abar(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def loss_simple(pred: NoisePredictor, x0, t: int, eps, schedule: NoiseSchedule) -> float:
    """Mean squared error between ``eps`` and the prediction on the noised ``x0``."""
    xt = forward_diffuse(x0, t, eps, schedule)
    out = pred.predict(xt, t)
    return float(np.mean((np.asarray(eps) - out) ** 2))
