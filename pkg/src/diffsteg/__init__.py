"""Generative steganography with a reversible diffusion sampler.

Secret bits are written as the signs of the DCT coefficients of a diffusion
latent, a stego image is generated from that latent with the deterministic
(eta = 0) sampler, and the bits are read back by running the sampler's Euler
diffusion from the received image to the latent.
"""

from .codec import (
    EmbedLayout,
    StegoImage,
    bits_to_bytes,
    bytes_to_bits,
    dequantize,
    embed,
    extract,
    quantize,
)
from .datasets import synth_dataset
from .denoiser import AnalyticOracle, NoisePredictor, forward_diffuse, loss_simple
from .network import TinyDenoiser
from .numerics import SeededRng, dct2, idct2, sample_gaussian
from .pipeline import (
    EvalReport,
    PipelineConfig,
    accuracy,
    bits_per_pixel,
    cover,
    evaluate,
    hide,
    recover_latent,
    reveal,
    sweep_steps,
)
from .sampler import (
    Trajectory,
    generate,
    generate_step,
    generate_step_stochastic,
    invert,
    invert_step,
)
from .schedule import NoiseSchedule, SamplingPlan, build_linear_schedule, build_plan, sigma
from .training import TrainConfig, TrainReport, gradient_check, train

__version__ = "0.1.0"
