"""
Train a toy denoiser, hide a message, read it back
==================================================

Trains the compact dense denoiser on synthetic blob images, then generates a
stego image from a 32-byte message and recovers the message from the 8-bit
PGM. Pass a step count to trade time for quality: the default 5000 steps
take about 30 s on one CPU core and recover roughly 90 % of the bits, while
20000 steps (the test suite's toy model) recover about 99 %.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from diffsteg import (
    PipelineConfig,
    TinyDenoiser,
    TrainConfig,
    build_linear_schedule,
    hide,
    reveal,
    synth_dataset,
    train,
)
from diffsteg.codec import bits_to_bytes, bytes_to_bits
from diffsteg.pnm import write_pnm

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
dims = (1, 16, 16)
schedule = build_linear_schedule(1000)

data = synth_dataset("blobs", 2000, dims, seed=1)
model = TinyDenoiser(dims, schedule, seed=1)
report = train(model, data, TrainConfig(steps=steps, seed=1, log_every=max(steps // 10, 1)), schedule)
for step, loss in zip(report.checkpoints, report.losses):
    print("step %6d  loss %.4f" % (step, loss))

# %%
message = b"meet me at the usual place, 9pm"
message = message.ljust(32, b".")
cfg = PipelineConfig(dims=dims, S=10, seed=7)
image, _ = hide(bytes_to_bits(message, 256), cfg, model)

out = Path(tempfile.mkdtemp()) / "stego.pgm"
write_pnm(out, image.pixels)
print("wrote", out)

recovered = bits_to_bytes(reveal(image, cfg, model))
acc = np.mean(bytes_to_bits(recovered, 256) == bytes_to_bits(message, 256))
print("recovered:", recovered)
print("bit accuracy %.4f" % acc)
