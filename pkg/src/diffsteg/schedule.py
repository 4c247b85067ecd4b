"""Diffusion schedule tables and accelerated sampling plans."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step retention factors ``alpha[t-1]`` and their running product.

    ``alpha_bar(0)`` is defined as 1 so that the terminal hop to or from the
    clean image uses the same transition formulas as every other hop.
    """

    alpha: np.ndarray
    name: str = "custom"
    _abar: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=np.float64)
        if alpha.ndim != 1 or alpha.size == 0:
            raise ValueError("alpha must be a non-empty 1-D table")
        if np.any(alpha <= 0.0) or np.any(alpha >= 1.0):
            raise ValueError("every alpha_t must lie in (0, 1)")
        alpha.setflags(write=False)
        abar = np.concatenate([[1.0], np.cumprod(alpha)])
        abar.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "_abar", abar)

    @property
    def T(self) -> int:
        return int(self.alpha.size)

    @property
    def alpha_bar(self) -> np.ndarray:
        """``alpha_bar[t-1]`` for t in 1..T."""
        return self._abar[1:]

    def abar(self, t: int) -> float:
        """Cumulative product at step ``t`` (``t = 0`` gives 1)."""
        if not 0 <= t <= self.T:
            raise IndexError(f"step {t} outside [0, {self.T}]")
        return float(self._abar[t])

    def abar_table(self, t) -> np.ndarray:
        """Vectorised :meth:`abar` for an integer array of steps."""
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t > self.T):
            raise IndexError(f"steps outside [0, {self.T}]")
        return self._abar[t]

    def dump_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "alpha", "alpha_bar"])
        for t in range(1, self.T + 1):
            w.writerow([t, repr(float(self.alpha[t - 1])), repr(float(self._abar[t]))])


def build_linear_schedule(T: int) -> NoiseSchedule:
    """``alpha_t = 1 - 0.02 t / T`` for t = 1..T."""
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    t = np.arange(1, T + 1, dtype=np.float64)
    return NoiseSchedule(1.0 - 0.02 * t / T, name=f"linear-{T}")


def sigma(schedule: NoiseSchedule, t_prev: int, t_cur: int, eta: float) -> float:
    """Noise scale of the stochastic hop ``t_cur -> t_prev``.

    ``t_prev`` may be 0, where the scale vanishes because ``alpha_bar(0) = 1``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if not 0 <= t_prev < t_cur <= schedule.T:
        raise IndexError(f"need 0 <= t_prev < t_cur <= {schedule.T}, got {t_prev}, {t_cur}")
    if eta == 0.0:
        return 0.0
    ap = schedule.abar(t_prev)
    ac = schedule.abar(t_cur)
    return eta * math.sqrt((1.0 - ap) / (1.0 - ac)) * math.sqrt(1.0 - ac / ap)


@dataclass(frozen=True)
class SamplingPlan:
    tau: tuple[int, ...]
    eta: float = 0.0

    @property
    def S(self) -> int:
        return len(self.tau)

    def validate(self, T: int) -> None:
        if not self.tau:
            raise ValueError("sampling plan is empty")
        if any(b <= a for a, b in zip(self.tau, self.tau[1:])):
            raise ValueError("tau must be strictly increasing")
        if self.tau[0] < 1 or self.tau[-1] > T:
            raise ValueError(f"tau indices must lie in [1, {T}]")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    def nodes(self) -> tuple[int, ...]:
        """``(0, t_1, ..., t_S)``: the plan with the clean-image node prepended."""
        return (0,) + self.tau


def build_plan(T: int, S: int, eta: float = 0.0, tau: Sequence[int] | None = None) -> SamplingPlan:
    """Uniformly spaced plan ``{T/S, 2T/S, ..., T}``, or a validated custom ``tau``."""
    if tau is not None:
        plan = SamplingPlan(tuple(int(t) for t in tau), eta)
        plan.validate(T)
        return plan
    if S < 1 or S > T:
        raise ValueError(f"need 1 <= S <= T, got S={S}, T={T}")
    if T % S:
        raise ValueError(f"S={S} does not divide T={T}; pass an explicit tau instead")
    dt = T // S
    plan = SamplingPlan(tuple(range(dt, T + 1, dt)), eta)
    plan.validate(T)
    return plan
