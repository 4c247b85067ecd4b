"""Deterministic generation and Euler inversion over a sampling plan.

Both directions use the same hop::

    x_dst = sqrt(abar_dst) * (x_src - sqrt(1 - abar_src) * e) / sqrt(abar_src)
            + sqrt(1 - abar_dst) * e,          e = pred.predict(x_src, t_src)

Generation walks ``t_S -> ... -> t_1 -> 0`` and inversion walks
``0 -> t_1 -> ... -> t_S``, with ``abar(0) = 1``. When ``e`` does not depend
on ``x`` each inverse hop undoes its forward hop exactly; otherwise the round
trip carries first-order (Euler) drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .denoiser import NoisePredictor
from .numerics import Grid, SeededRng, as_grid
from .schedule import NoiseSchedule, SamplingPlan, sigma


@dataclass
class Trajectory:
    direction: str  # "generate" or "invert"
    states: list[tuple[int, Grid]] = field(default_factory=list)

    @property
    def steps(self) -> list[int]:
        return [t for t, _ in self.states]

    def state_at(self, t: int) -> Grid:
        for s, x in self.states:
            if s == t:
                return x
        raise KeyError(t)

    @property
    def final(self) -> Grid:
        return self.states[-1][1]


def _hop(x, t_src: int, t_dst: int, pred: NoisePredictor, schedule: NoiseSchedule) -> Grid:
    a_src = schedule.abar(t_src)
    a_dst = schedule.abar(t_dst)
    e = pred.predict(x, t_src)
    x0_hat = (x - math.sqrt(1.0 - a_src) * e) / math.sqrt(a_src)
    return math.sqrt(a_dst) * x0_hat + math.sqrt(1.0 - a_dst) * e


def generate_step(x_cur, t_cur: int, t_prev: int, pred: NoisePredictor, schedule: NoiseSchedule) -> Grid:
    """One deterministic denoising hop ``t_cur -> t_prev`` (``t_prev`` may be 0)."""
    if not 0 <= t_prev < t_cur <= schedule.T:
        raise ValueError(f"generation hop needs 0 <= t_prev < t_cur <= T, got {t_cur} -> {t_prev}")
    return _hop(as_grid(x_cur), t_cur, t_prev, pred, schedule)


def invert_step(x_cur, t_cur: int, t_next: int, pred: NoisePredictor, schedule: NoiseSchedule) -> Grid:
    """One Euler diffusion hop ``t_cur -> t_next`` with ``t_next > t_cur``."""
    if not 0 <= t_cur < t_next <= schedule.T:
        raise ValueError(f"inversion hop needs 0 <= t_cur < t_next <= T, got {t_cur} -> {t_next}")
    return _hop(as_grid(x_cur), t_cur, t_next, pred, schedule)


def generate_step_stochastic(
    x_cur, t_cur: int, t_prev: int, pred: NoisePredictor, schedule: NoiseSchedule, eta: float, rng: SeededRng | None
) -> Grid:
    """General-eta hop: predicted-x0 term, direction term, and fresh noise."""
    if not 0 <= t_prev < t_cur <= schedule.T:
        raise ValueError(f"generation hop needs 0 <= t_prev < t_cur <= T, got {t_cur} -> {t_prev}")
    x_cur = as_grid(x_cur)
    s = sigma(schedule, t_prev, t_cur, eta)
    a_cur = schedule.abar(t_cur)
    a_prev = schedule.abar(t_prev)
    radicand = 1.0 - a_prev - s * s
    if radicand < -1e-15:
        raise ValueError(f"sigma^2 = {s * s:.6g} exceeds 1 - abar_prev = {1 - a_prev:.6g}")
    e = pred.predict(x_cur, t_cur)
    x0_hat = (x_cur - math.sqrt(1.0 - a_cur) * e) / math.sqrt(a_cur)
    out = math.sqrt(a_prev) * x0_hat + math.sqrt(max(radicand, 0.0)) * e
    if s > 0.0:
        if rng is None:
            raise ValueError("eta > 0 needs a random stream")
        out = out + s * rng.normal(x_cur.shape)
    return out


def generate(
    x_S,
    plan: SamplingPlan,
    pred: NoisePredictor,
    schedule: NoiseSchedule,
    record: bool = False,
    rng: SeededRng | None = None,
):
    """Denoise ``x_S`` along ``plan`` down to ``x_0``.

    Returns ``x_0``, or a :class:`Trajectory` of the S + 1 visited states when
    ``record`` is set. A plan with ``eta > 0`` uses the stochastic hop and
    needs ``rng``.
    """
    plan.validate(schedule.T)
    x = as_grid(x_S)
    nodes = plan.nodes()
    traj = Trajectory("generate", [(nodes[-1], x)]) if record else None
    for i in range(len(nodes) - 1, 0, -1):
        if plan.eta == 0.0:
            x = generate_step(x, nodes[i], nodes[i - 1], pred, schedule)
        else:
            x = generate_step_stochastic(x, nodes[i], nodes[i - 1], pred, schedule, plan.eta, rng)
        if traj is not None:
            traj.states.append((nodes[i - 1], x))
    return traj if record else x


def invert(x_0, plan: SamplingPlan, pred: NoisePredictor, schedule: NoiseSchedule, record: bool = False):
    """Run the Euler diffusion from ``x_0`` up to ``x_{t_S}``."""
    plan.validate(schedule.T)
    if plan.eta != 0.0:
        raise ValueError("inversion is only defined for the deterministic (eta = 0) sampler")
    x = as_grid(x_0)
    nodes = plan.nodes()
    traj = Trajectory("invert", [(0, x)]) if record else None
    for i in range(len(nodes) - 1):
        x = invert_step(x, nodes[i], nodes[i + 1], pred, schedule)
        if traj is not None:
            traj.states.append((nodes[i + 1], x))
    return traj if record else x
