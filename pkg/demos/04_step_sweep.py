"""
Accuracy, latent error and time against the number of sampling steps
=====================================================================

Uses analytic predictors so it runs in seconds. Their generated images sit
far outside [-1, 1] (the zero predictor returns the latent scaled by
1/sqrt(alpha_bar_T), about 150), so the 8-bit quantizer would clip them;
the oracle rows therefore skip quantization and round-trip exactly. Point
``--checkpoint`` at a trained model (``diffsteg train``) for the full
quantized path.
"""

import argparse
import sys

from diffsteg import AnalyticOracle, PipelineConfig, TinyDenoiser, build_linear_schedule, sweep_steps
from diffsteg.pipeline import format_summary, write_sweep_csv

ap = argparse.ArgumentParser()
ap.add_argument("--checkpoint")
ap.add_argument("--trials", type=int, default=20)
args = ap.parse_args()

if args.checkpoint:
    model = TinyDenoiser.load(args.checkpoint, build_linear_schedule(1000))
    predictors = {"checkpoint": (model, True)}
else:
    predictors = {"constant 0.5": (AnalyticOracle.constant(0.5), False), "zero": (AnalyticOracle.zero(), False)}

for name, (model, quantize) in predictors.items():
    dims = getattr(model, "dims", (1, 16, 16))
    cfg = PipelineConfig(dims=dims, quantize=quantize)
    rows = sweep_steps(cfg, model, [10, 50, 100], trials=args.trials)
    print("\n" + name)
    print(format_summary(rows))

write_sweep_csv(rows, sys.stdout)
