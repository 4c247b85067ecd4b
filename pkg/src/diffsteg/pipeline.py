"""End-to-end hiding and extraction, plus the evaluation harness."""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .codec import EmbedLayout, StegoImage, as_bits, capacity, dequantize, embed, extract, quantize
from .denoiser import NoisePredictor
from .numerics import Dims, Grid, SeededRng, as_grid, check_dims, dct2, sample_gaussian
from .sampler import Trajectory, generate, invert
from .schedule import NoiseSchedule, SamplingPlan, build_linear_schedule, build_plan


@dataclass
class PipelineConfig:
    dims: Dims = (1, 16, 16)
    T: int = 1000
    S: int = 10
    eta: float = 0.0
    amplitude: float = 1.0
    seed: int = 0
    checkpoint: str | None = None
    quantize: bool = True

    def __post_init__(self):
        self.dims = check_dims(self.dims)
        if self.eta != 0.0:
            raise ValueError("hiding and extraction require eta = 0")
        self.plan()  # validates S against T

    def schedule(self) -> NoiseSchedule:
        return _schedule(self.T)

    def plan(self) -> SamplingPlan:
        return build_plan(self.T, self.S)

    def layout(self) -> EmbedLayout:
        return EmbedLayout(self.amplitude)

    def with_S(self, S: int) -> "PipelineConfig":
        return PipelineConfig(**{**asdict(self), "S": S})


_schedules: dict[int, NoiseSchedule] = {}


def _schedule(T: int) -> NoiseSchedule:
    if T not in _schedules:
        _schedules[T] = build_linear_schedule(T)
    return _schedules[T]


def _check_model(model: NoisePredictor, dims: Dims) -> None:
    mdims = getattr(model, "dims", None)
    if mdims is not None and tuple(mdims) != tuple(dims):
        raise ValueError(f"model dims {tuple(mdims)} do not match config dims {tuple(dims)}")


def hide(d, cfg: PipelineConfig, model: NoisePredictor, record: bool = False, layout: EmbedLayout | None = None):
    """Generate a stego image carrying bits ``d``.

    Returns ``(image, trajectory)``: a :class:`StegoImage` (or the float
    ``x_0`` grid when ``cfg.quantize`` is off) and the generation trajectory
    if ``record`` is set, else None.
    """
    _check_model(model, cfg.dims)
    rng = SeededRng(cfg.seed)
    # the Gaussian latent is drawn for parity with the cover path; every DCT
    # coefficient is then replaced by the payload signs
    sample_gaussian(rng, cfg.dims)
    z_s = embed(d, cfg.dims, layout or cfg.layout())
    out = generate(z_s, cfg.plan(), model, cfg.schedule(), record=record)
    x0 = out.final if record else out
    image = _finish(x0, cfg)
    return image, (out if record else None)


def cover(cfg: PipelineConfig, model: NoisePredictor, record: bool = False):
    """Image generated from an unmodified Gaussian latent (no payload)."""
    _check_model(model, cfg.dims)
    z = sample_gaussian(SeededRng(cfg.seed), cfg.dims)
    out = generate(z, cfg.plan(), model, cfg.schedule(), record=record)
    x0 = out.final if record else out
    return _finish(x0, cfg), (out if record else None)


def _finish(x0: Grid, cfg: PipelineConfig):
    if cfg.quantize:
        return quantize(x0, S=cfg.S, seed=cfg.seed, schedule_id=cfg.schedule().name)
    return x0


def recover_latent(img, cfg: PipelineConfig, model: NoisePredictor, record: bool = False):
    """Pre-process a received image and run the diffusion back to ``z'_s``."""
    _check_model(model, cfg.dims)
    x0 = dequantize(img) if isinstance(img, StegoImage) else as_grid(img, cfg.dims)
    if x0.shape != cfg.dims:
        raise ValueError(f"image dims {x0.shape} do not match config dims {cfg.dims}")
    return invert(x0, cfg.plan(), model, cfg.schedule(), record=record)


def reveal(img, cfg: PipelineConfig, model: NoisePredictor, layout: EmbedLayout | None = None) -> np.ndarray:
    """Recover the hidden bits from a stego image (quantized or float)."""
    return extract(recover_latent(img, cfg, model), layout or cfg.layout())


def accuracy(d, d_prime) -> float:
    """Fraction of positions where the two bit vectors agree."""
    a, b = as_bits(d), as_bits(d_prime)
    if a.size != b.size:
        raise ValueError(f"bit vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        return 1.0
    return float(np.mean(a == b))


def bits_per_pixel(n_bits: int, dims: Sequence[int]) -> float:
    return n_bits / capacity(dims)


def coefficient_spread(z: Grid, amplitude: float = 1.0) -> float:
    """Mean relative distance of ``|DCT(z)|`` from the embedding amplitude.

    Close to 0 for a well-recovered latent; large values point to a mismatched
    step count or checkpoint.
    """
    c = np.abs(dct2(z))
    return float(np.mean(np.abs(c - amplitude)) / amplitude)


def channel_stats_distance(images: np.ndarray, reference: np.ndarray) -> float:
    """Diagnostic only, not comparable to FID: summed per-channel
    ``|mean_g - mean_r| + |var_g - var_r|`` between two image stacks."""
    g = np.asarray(images, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    axes = (0, 2, 3)
    return float(np.sum(np.abs(g.mean(axes) - r.mean(axes)) + np.abs(g.var(axes) - r.var(axes))))


@dataclass
class EvalReport:
    S: int
    bpp: float
    acc: float
    mean_abs_latent_error: float
    gen_time: float
    ext_time: float
    mean_time: float
    trials: int
    diagnostic_stats: float | None = None
    accs: list[float] = field(default_factory=list, repr=False)


def evaluate(
    cfg: PipelineConfig,
    model: NoisePredictor,
    trials: int = 100,
    seed: int = 0,
    reference: np.ndarray | None = None,
) -> EvalReport:
    """Hide and reveal ``trials`` random payloads at ``cfg.S``.

    Timing wraps only the hide and reveal bodies. The latent error is the
    mean |z_s - z'_s| over all elements and trials.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    n = capacity(cfg.dims)
    payloads = SeededRng(seed)
    layout = cfg.layout()
    accs, errs, images = [], [], []
    t_gen = t_ext = 0.0
    for k in range(trials):
        d = payloads.bits(n)
        tc = PipelineConfig(**{**asdict(cfg), "seed": cfg.seed + k})
        t0 = time.perf_counter()
        img, _ = hide(d, tc, model)
        t1 = time.perf_counter()
        z_rec = recover_latent(img, tc, model)
        d_rec = extract(z_rec, layout)
        t2 = time.perf_counter()
        t_gen += t1 - t0
        t_ext += t2 - t1
        accs.append(accuracy(d, d_rec))
        errs.append(float(np.mean(np.abs(embed(d, cfg.dims, layout) - z_rec))))
        images.append(dequantize(img) if isinstance(img, StegoImage) else img)
    gen, ext = t_gen / trials, t_ext / trials
    diag = channel_stats_distance(np.stack(images), reference) if reference is not None else None
    return EvalReport(
        S=cfg.S,
        bpp=bits_per_pixel(n, cfg.dims),
        acc=float(np.mean(accs)),
        mean_abs_latent_error=float(np.mean(errs)),
        gen_time=gen,
        ext_time=ext,
        mean_time=(gen + ext) / 2,
        trials=trials,
        diagnostic_stats=diag,
        accs=accs,
    )


def sweep_steps(
    cfg: PipelineConfig,
    model: NoisePredictor,
    S_list: Sequence[int],
    trials: int = 100,
    seed: int = 0,
    reference: np.ndarray | None = None,
) -> list[EvalReport]:
    """One :func:`evaluate` row per step count, same payloads for every S."""
    for S in S_list:
        build_plan(cfg.T, S)
    return [evaluate(cfg.with_S(S), model, trials, seed, reference) for S in S_list]


SWEEP_COLUMNS = ("S", "acc", "mean_abs_latent_error", "gen_time", "ext_time", "mean_time")


def write_sweep_csv(rows: Sequence[EvalReport], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.S] + [repr(float(getattr(r, c))) for c in SWEEP_COLUMNS[1:]])


def format_summary(rows: Sequence[EvalReport]) -> str:
    lines = [f"{'S':>6} {'bpp':>6} {'acc':>9} {'latent_mae':>11} {'gen_s':>10} {'ext_s':>10} {'time_s':>10}"]
    for r in rows:
        lines.append(
            f"{r.S:>6d} {r.bpp:>6.3f} {r.acc:>9.5f} {r.mean_abs_latent_error:>11.5f} "
            f"{r.gen_time:>10.3e} {r.ext_time:>10.3e} {r.mean_time:>10.3e}"
        )
    diag = [r for r in rows if r.diagnostic_stats is not None]
    if diag:
        lines.append("channel mean/var distance to reference (diagnostic, not FID-comparable):")
        lines += [f"  S={r.S}: {r.diagnostic_stats:.5f}" for r in diag]
    return "\n".join(lines)
