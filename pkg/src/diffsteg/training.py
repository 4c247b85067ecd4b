"""Training loop (noisy-input DDPM objective), Adam, and a finite-difference
gradient check for :class:`~diffsteg.network.TinyDenoiser`."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .network import TinyDenoiser
from .numerics import SeededRng
from .schedule import NoiseSchedule

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    steps: int = 20_000
    batch: int = 64
    learning_rate: float = 1e-3
    input_noise_std: float = 0.01
    seed: int = 0
    log_every: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 1 or self.batch < 1 or self.log_every < 1:
            raise ValueError("steps, batch and log_every must be positive")
        if self.learning_rate < 0 or self.input_noise_std < 0:
            raise ValueError("learning_rate and input_noise_std must be non-negative")


@dataclass
class TrainReport:
    checkpoints: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    step_losses: np.ndarray | None = None
    weights: list[np.ndarray] | None = None

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.n = 0

    def step(self, params, grads) -> None:
        self.n += 1
        c1 = 1.0 - self.beta1**self.n
        c2 = 1.0 - self.beta2**self.n
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(model: TinyDenoiser, dataset: np.ndarray, cfg: TrainConfig, schedule: NoiseSchedule | None = None) -> TrainReport:
    """Fit ``model`` in place on images in [-1, 1] of shape ``(N, C, H, W)``.

    Each step: draw a batch of images, add N(0, input_noise_std^2) noise, draw
    t uniformly from 1..T and eps ~ N(0, 1), then take one Adam step on the
    mean squared noise-prediction error. ``report.losses[i]`` is the mean step
    loss over the window ending at ``report.checkpoints[i]``; ``losses[0]`` is
    the loss of the very first step.
    """
    schedule = schedule or model.schedule
    if schedule.T != model.schedule.T:
        raise ValueError("training schedule differs from the model's schedule")
    data = np.asarray(dataset, dtype=np.float64)
    if data.ndim != 4 or data.shape[0] == 0:
        raise ValueError("dataset must be a non-empty (N, C, H, W) array")
    if data.shape[1:] != model.dims:
        raise ValueError(f"dataset dims {data.shape[1:]} do not match model dims {model.dims}")

    rng = SeededRng(cfg.seed)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    step_losses = np.empty(cfg.steps)
    report = TrainReport()
    B = cfg.batch
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, data.shape[0] - 1, size=B)
        x0 = data[idx] + cfg.input_noise_std * rng.normal((B,) + model.dims)
        t = rng.integers(1, schedule.T, size=B)
        eps = rng.normal((B,) + model.dims)
        ab = schedule.abar_table(t)[:, None, None, None]
        xt = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
        loss, grads = model.loss_and_grad(xt, t, eps)
        if not np.isfinite(loss):
            last = step_losses[step - 2] if step > 1 else float("nan")
            raise TrainingDiverged(f"loss became {loss} at step {step} (previous loss {last:.6g}); "
                                   f"try a smaller learning rate than {cfg.learning_rate}")
        step_losses[step - 1] = loss
        opt.step(model.params, grads)
        if step == 1:
            report.checkpoints.append(1)
            report.losses.append(loss)
        if step % cfg.log_every == 0:
            window = step_losses[step - cfg.log_every : step]
            report.checkpoints.append(step)
            report.losses.append(float(window.mean()))
            if step % (cfg.log_every * 20) == 0:
                log.info("step %d loss %.5f", step, report.losses[-1])
    report.step_losses = step_losses
    report.weights = model.params
    return report


def gradient_check(
    model: TinyDenoiser,
    x,
    t: int,
    eps=None,
    n_params: int = 128,
    h: float = 1e-5,
    seed: int = 0,
    floor: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Compares ``n_params`` randomly chosen scalar parameters (spread over all
    layers). The relative error is ``|a - n| / max(|a|, |n|, floor)``; the
    floor keeps near-zero gradients from dominating on rounding noise.
    """
    rng = SeededRng(seed)
    x = np.asarray(x, dtype=np.float64).reshape((1,) + model.dims)
    eps = rng.normal(x.shape) if eps is None else np.asarray(eps, dtype=np.float64).reshape(x.shape)
    ab = model.schedule.abar(t)
    xt = np.sqrt(ab) * x + np.sqrt(1.0 - ab) * eps
    tt = np.array([t])
    _, grads = model.loss_and_grad(xt, tt, eps)

    sizes = np.array([p.size for p in model.params])
    # at least a few picks from every layer, the rest proportional to size
    picks = []
    for li, p in enumerate(model.params):
        k = min(p.size, max(4, n_params * p.size // sizes.sum()))
        picks += [(li, int(i)) for i in rng.integers(0, p.size - 1, size=k)]

    worst = 0.0
    for li, i in picks:
        flat = model.params[li].reshape(-1)
        old = flat[i]
        flat[i] = old + h
        lp, _ = model.loss_and_grad(xt, tt, eps)
        flat[i] = old - h
        lm, _ = model.loss_and_grad(xt, tt, eps)
        flat[i] = old
        num = (lp - lm) / (2 * h)
        ana = grads[li].reshape(-1)[i]
        worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), floor))
    return worst
