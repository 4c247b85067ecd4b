"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codec import StegoImage, bits_to_bytes, bytes_to_bits, capacity, extract, quantize
from .datasets import KINDS, synth_dataset
from .denoiser import AnalyticOracle
from .network import CheckpointError, TinyDenoiser
from .numerics import SeededRng, parse_dims
from .pipeline import (
    PipelineConfig,
    coefficient_spread,
    cover,
    format_summary,
    hide,
    recover_latent,
    sweep_steps,
    write_sweep_csv,
)
from .pnm import PnmError, pnm_suffix, read_pnm, write_pnm
from .schedule import build_linear_schedule, build_plan
from .training import TrainConfig, TrainingDiverged, train

log = logging.getLogger("diffsteg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MISMATCH_SPREAD = 0.75

DEFAULTS = {
    "dims": "1x16x16",
    "T": 1000,
    "S": 10,
    "eta": 0.0,
    "amplitude": 1.0,
    "seed": 0,
    "steps": 20000,
    "batch": 64,
    "lr": 1e-3,
    "noise_std": 0.01,
    "dataset": "blobs",
    "count": 2000,
    "grain": 0.3,
    "log_every": 100,
    "trials": 100,
    "S_list": "10,50,100",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- argument plumbing -------------------------------------------------------


def _common(p: argparse.ArgumentParser, model=True):
    p.add_argument("--config", help="JSON file of option defaults; flags take precedence")
    p.add_argument("--dims", help="CxHxW, e.g. 1x16x16")
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int, help="falls back to $GSD_SEED, then 0")
    if model:
        p.add_argument("--checkpoint", help="trained model file")
        p.add_argument("--oracle", help="zero | constant:<c>, used instead of a checkpoint")
        p.add_argument("--S", type=int)
        p.add_argument("--amplitude", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="diffsteg", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"diffsteg {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the toy denoiser")
    _common(p, model=False)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--noise-std", dest="noise_std", type=float, help="input noise std added to x0")
    p.add_argument("--dataset", choices=KINDS)
    p.add_argument("--count", type=int, help="synthetic training images")
    p.add_argument("--grain", type=float, help="grain std of the synthetic images")
    p.add_argument("--log-every", dest="log_every", type=int)
    p.add_argument("--out", default="model.gsdw")
    p.add_argument("--loss-csv", dest="loss_csv", help="default: <out>.loss.csv")

    p = sub.add_parser("hide", help="generate a stego image from a secret file")
    _common(p)
    p.add_argument("--secret", help="raw bytes; bits are taken MSB-first")
    p.add_argument("--cover", action="store_true", help="generate a cover image without a payload")
    p.add_argument("--no-quantize", dest="no_quantize", action="store_true", help="write the float image as .npy")
    p.add_argument("--out")

    p = sub.add_parser("reveal", help="recover the secret from a stego image")
    _common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--out", default="secret.bin")

    p = sub.add_parser("sweep", help="accuracy / latent error / timing over step counts")
    _common(p)
    p.add_argument("--S-list", "--steps-list", dest="S_list", help="comma-separated step counts")
    p.add_argument("--trials", type=int)
    p.add_argument("--no-quantize", dest="no_quantize", action="store_true")
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("schedule", help="schedule utilities")
    ssub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    d = ssub.add_parser("dump", help="write t, alpha, alpha_bar as CSV")
    d.add_argument("--T", type=int)
    d.add_argument("--config")
    d.add_argument("--out", help="default: stdout")

    p = sub.add_parser("trajectory", help="export one image per sampling node")
    _common(p)
    p.add_argument("--direction", choices=("generate", "invert"), default="generate")
    p.add_argument("--secret", help="payload for --direction generate (random bits if omitted)")
    p.add_argument("--image", help="stego image for --direction invert")
    p.add_argument("--eta", type=float, help="stochastic sampling for --direction generate")
    p.add_argument("--out", default="trajectory")
    return ap


def _merge(args: argparse.Namespace) -> dict:
    """Defaults < config file < $GSD_SEED (seed only) < explicit flags."""
    opts = dict(DEFAULTS)
    file_opts: dict = {}
    if getattr(args, "config", None):
        try:
            file_opts = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_opts, dict):
            raise UsageError("config file must hold a JSON object")
        file_opts = {k.replace("-", "_"): v for k, v in file_opts.items()}
        opts.update(file_opts)
    env = os.environ.get("GSD_SEED")
    if env is not None and "seed" not in file_opts:
        try:
            opts["seed"] = int(env)
        except ValueError as exc:
            raise UsageError(f"GSD_SEED={env!r} is not an integer") from exc
    flags = {k: v for k, v in vars(args).items() if v is not None and v is not False}
    opts.update(flags)
    opts["_explicit_dims"] = "dims" in flags or "dims" in file_opts
    return opts


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(artifact, command: str, opts: dict) -> Path:
    snapshot = {k: v for k, v in sorted(opts.items()) if not k.startswith("_") and k not in ("command", "verbose", "action", "config")}
    ckpt = opts.get("checkpoint")
    manifest = {
        "tool": "diffsteg",
        "version": __version__,
        "command": command,
        "config": snapshot,
        "seed": opts.get("seed"),
        "checkpoint_sha256": _sha256(ckpt) if ckpt else None,
        "secret_bit_order": "msb-first",
    }
    path = Path(str(artifact) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load_model(opts: dict):
    """Return ``(model, dims)`` from --checkpoint or --oracle."""
    T = int(opts["T"])
    if opts.get("checkpoint") and opts.get("oracle"):
        raise UsageError("pass either --checkpoint or --oracle, not both")
    if opts.get("checkpoint"):
        model = TinyDenoiser.load(opts["checkpoint"], build_linear_schedule(T))
        if opts.get("_explicit_dims") and parse_dims(opts["dims"]) != model.dims:
            raise ValueError(f"--dims {opts['dims']} does not match checkpoint dims {model.dims}")
        return model, model.dims
    spec = opts.get("oracle")
    if not spec:
        raise UsageError("a --checkpoint or an --oracle is required")
    dims = parse_dims(opts["dims"])
    if spec == "zero":
        return AnalyticOracle.zero(), dims
    if spec.startswith("constant:"):
        try:
            c = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad oracle {spec!r}") from exc
        return AnalyticOracle.constant(c), dims
    raise UsageError(f"unknown oracle {spec!r}; use zero or constant:<c>")


def _pipeline_config(opts: dict, dims, quantize=True) -> PipelineConfig:
    if float(opts.get("eta") or 0.0) != 0.0:
        raise UsageError("--eta is only valid for trajectory generation; hiding requires eta = 0")
    try:
        build_plan(int(opts["T"]), int(opts["S"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return PipelineConfig(
        dims=dims,
        T=int(opts["T"]),
        S=int(opts["S"]),
        amplitude=float(opts["amplitude"]),
        seed=int(opts["seed"]),
        checkpoint=opts.get("checkpoint"),
        quantize=quantize,
    )


def _read_image(path, dims):
    data = Path(path).read_bytes()
    if data.startswith(b"\x93NUMPY"):
        x = np.load(path, allow_pickle=False)
        if x.shape != tuple(dims):
            raise ValueError(f"image dims {x.shape} do not match model dims {tuple(dims)}")
        return x
    pixels = read_pnm(path)
    if pixels.shape != tuple(dims):
        raise ValueError(f"image dims {pixels.shape} do not match model dims {tuple(dims)}")
    return StegoImage(pixels)


# -- commands ------------------------------------------------------------------


def cmd_train(opts: dict) -> int:
    dims = parse_dims(opts["dims"])
    if int(opts["steps"]) < 1:
        raise UsageError("--steps must be at least 1")
    try:
        cfg = TrainConfig(
            steps=int(opts["steps"]),
            batch=int(opts["batch"]),
            learning_rate=float(opts["lr"]),
            input_noise_std=float(opts["noise_std"]),
            seed=int(opts["seed"]),
            log_every=int(opts["log_every"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    schedule = build_linear_schedule(int(opts["T"]))
    data = synth_dataset(opts["dataset"], int(opts["count"]), dims, seed=int(opts["seed"]), grain=float(opts["grain"]))
    model = TinyDenoiser(dims, schedule, seed=int(opts["seed"]))
    out = Path(opts["out"])
    tmp = out.with_name(out.name + ".partial")
    try:
        report = train(model, data, cfg, schedule)
    except TrainingDiverged:
        tmp.unlink(missing_ok=True)
        raise
    model.save(tmp)
    tmp.replace(out)
    loss_csv = Path(opts.get("loss_csv") or str(out) + ".loss.csv")
    with loss_csv.open("w", newline="") as fh:
        fh.write("step,loss\n")
        for s, l in zip(report.checkpoints, report.losses):
            fh.write(f"{s},{l!r}\n")
    opts = {**opts, "checkpoint": str(out)}
    _write_manifest(out, "train", opts)
    print(f"wrote {out} ({model.num_params} parameters), loss {report.initial_loss:.4f} -> {report.final_loss:.4f}")
    return EXIT_OK


def cmd_hide(opts: dict) -> int:
    model, dims = _load_model(opts)
    cfg = _pipeline_config(opts, dims, quantize=not opts.get("no_quantize"))
    if opts.get("cover"):
        img, _ = cover(cfg, model)
    else:
        if not opts.get("secret"):
            raise UsageError("--secret is required (or --cover)")
        n = capacity(dims)
        bits = bytes_to_bits(Path(opts["secret"]).read_bytes(), n)
        img, _ = hide(bits, cfg, model)
    if cfg.quantize:
        out = Path(opts.get("out") or "stego" + pnm_suffix(dims[0]))
        write_pnm(out, img.pixels)
    else:
        out = Path(opts.get("out") or "stego.npy")
        with out.open("wb") as fh:
            np.save(fh, img, allow_pickle=False)
    _write_manifest(out, "hide", opts)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_reveal(opts: dict) -> int:
    model, dims = _load_model(opts)
    cfg = _pipeline_config(opts, dims)
    img = _read_image(opts["image"], dims)
    z = recover_latent(img, cfg, model)
    bits = extract(z, cfg.layout())
    out = Path(opts["out"])
    out.write_bytes(bits_to_bytes(bits))
    _write_manifest(out, "reveal", opts)
    spread = coefficient_spread(z, cfg.amplitude)
    print(f"wrote {out} ({bits.size} bits); coefficient spread {spread:.3f}")
    if spread > MISMATCH_SPREAD:
        print(
            f"warning: recovered coefficients are far from +/-{cfg.amplitude:g} (spread {spread:.3f}); "
            "probable S/checkpoint mismatch, expect low accuracy",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_sweep(opts: dict) -> int:
    model, dims = _load_model(opts)
    try:
        S_list = [int(s) for s in str(opts["S_list"]).split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --S-list {opts['S_list']!r}") from exc
    cfg = _pipeline_config({**opts, "S": S_list[0]}, dims, quantize=not opts.get("no_quantize"))
    for S in S_list:
        _pipeline_config({**opts, "S": S}, dims)
    rows = sweep_steps(cfg, model, S_list, trials=int(opts["trials"]), seed=int(opts["seed"]))
    out = Path(opts["out"])
    with out.open("w", newline="") as fh:
        write_sweep_csv(rows, fh)
    _write_manifest(out, "sweep", opts)
    print(format_summary(rows))
    return EXIT_OK


def cmd_schedule(opts: dict) -> int:
    schedule = build_linear_schedule(int(opts["T"]))
    if opts.get("out"):
        with open(opts["out"], "w", newline="") as fh:
            schedule.dump_csv(fh)
    else:
        schedule.dump_csv(sys.stdout)
    return EXIT_OK


def cmd_trajectory(opts: dict) -> int:
    from .sampler import generate, invert

    model, dims = _load_model(opts)
    eta = float(opts.get("eta") or 0.0)
    cfg = _pipeline_config({**opts, "eta": 0.0}, dims)
    schedule = cfg.schedule()
    outdir = Path(opts["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    if opts["direction"] == "generate":
        from .codec import embed

        n = capacity(dims)
        if opts.get("secret"):
            bits = bytes_to_bits(Path(opts["secret"]).read_bytes(), n)
        else:
            bits = SeededRng(cfg.seed).bits(n)
        plan = build_plan(cfg.T, cfg.S, eta=eta)
        traj = generate(embed(bits, dims, cfg.layout()), plan, model, schedule, record=True, rng=SeededRng(cfg.seed))
    else:
        if eta:
            raise UsageError("--eta applies to --direction generate only")
        if not opts.get("image"):
            raise UsageError("--image is required for --direction invert")
        traj = recover_latent(_read_image(opts["image"], dims), cfg, model, record=True)
    suffix = pnm_suffix(dims[0])
    width = len(str(cfg.T))
    for t, x in traj.states:
        write_pnm(outdir / f"step_{t:0{width}d}{suffix}", quantize(x).pixels)
    _write_manifest(outdir / "trajectory", "trajectory", opts)
    print(f"wrote {len(traj.states)} images to {outdir}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "hide": cmd_hide,
    "reveal": cmd_reveal,
    "sweep": cmd_sweep,
    "schedule": cmd_schedule,
    "trajectory": cmd_trajectory,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        opts = _merge(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"diffsteg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, FloatingPointError) as exc:
        print(f"diffsteg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, PnmError, CheckpointError, OSError, IndexError) as exc:
        print(f"diffsteg: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
