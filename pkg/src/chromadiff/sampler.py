"""Iterative colorization: restore toward color, re-degrade toward gray.

Each step runs the residual predictor under classifier-free guidance,

    p = p_neg + s * (p_cond - p_neg),

forms the clean-latent estimate zhat = z + p, and moves the running
latent a 1/T fraction of the way from the gray anchor toward zhat:
z <- z + (1/T) * (zhat - z_gray). After the last step the accumulated
color residual is rescaled by the color scale s' and decoded; the output
keeps the input's lightness channel exactly (only chroma is synthesized).

At s = 1 the guidance formula reduces to the conditional branch alone, so
the negative pass is skipped entirely; this keeps s = 1 bit-identical to
a conditional-only sampler instead of merely close to it.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from chromadiff.colorspace import colorfulness, replace_luma, validate_gray
from chromadiff.diffusion import make_schedule
from chromadiff.prompts import NEGATIVE_PROMPT

__all__ = [
    "SamplerConfig",
    "ColorizationResult",
    "colorize",
    "scale_color",
    "render_scaled",
    "rescale",
    "step_trace",
]


@dataclasses.dataclass(frozen=True)
class SamplerConfig:
    steps: int = 10
    guidance_scale: float = 1.6
    color_scale: float = 0.8
    prompt: str = ""
    negative_prompt: str = NEGATIVE_PROMPT
    trace: bool = False

    def __post_init__(self):
        if not isinstance(self.steps, int) or not 1 <= self.steps <= 100:
            raise ValueError(f"steps must be an integer in [1, 100], got {self.steps!r}")
        if self.guidance_scale < 0:
            raise ValueError("guidance scale must be >= 0")
        if self.color_scale < 0:
            raise ValueError("color scale must be >= 0")


@dataclasses.dataclass
class ColorizationResult:
    image: np.ndarray
    residual: np.ndarray     # accumulated color residual at full strength
    gray_latent: np.ndarray  # anchor the residual applies to
    final_latent: np.ndarray
    config: SamplerConfig
    frames: list[np.ndarray] | None = None
    trace: list[dict] | None = None


def scale_color(z_gray: np.ndarray, delta: np.ndarray, s_prime: float) -> np.ndarray:
    """Recolored latent z_gray + s'*delta."""
    z_gray = np.asarray(z_gray, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if z_gray.shape != delta.shape:
        raise ValueError(f"shape mismatch {z_gray.shape} vs {delta.shape}")
    return z_gray + s_prime * delta


def _pad_to_multiple(gray: np.ndarray, f: int):
    h, w = gray.shape
    ph = (-h) % f
    pw = (-w) % f
    if ph or pw:
        gray = np.pad(gray, ((0, ph), (0, pw)), mode="symmetric")
    return gray, (h, w)


def _decode_merged(z: np.ndarray, codec, gray: np.ndarray) -> np.ndarray:
    # decode, crop away the padding, then put the source lightness back
    img = codec.decode(z)[: gray.shape[0], : gray.shape[1]]
    return replace_luma(img, gray)


def colorize(gray: np.ndarray, cfg: SamplerConfig, model, codec, *,
             init_latent: np.ndarray | None = None,
             start_step: int = 0) -> ColorizationResult:
    """Colorize a gray image through the full iterative loop.

    `model` needs predict_residual(z, t, prompt); `codec` provides
    encode/decode. Images with dims not divisible by the codec factor are
    reflection-padded for the latent walk and cropped after decoding.
    Deterministic: no randomness anywhere in the loop.

    The enhancement workflow enters the loop mid-way: `init_latent`
    replaces the gray encoding as the starting point (it must match the
    padded latent shape) and `start_step` skips that many leading
    schedule entries while keeping the same 1/T update size. The gray
    anchor for the color residual stays the gray encoding either way.
    """
    gray = validate_gray(gray)
    padded, _ = _pad_to_multiple(gray, codec.f)
    z_gray = codec.encode(padded)
    if not isinstance(start_step, (int, np.integer)) or not 0 <= start_step <= cfg.steps:
        raise ValueError(f"start_step must be an integer in [0, {cfg.steps}]")
    if init_latent is None:
        z = z_gray.copy()
    else:
        z = np.asarray(init_latent, dtype=np.float64)
        if z.shape != z_gray.shape:
            raise ValueError(f"init latent shape {z.shape} != {z_gray.shape}")
        z = z.copy()
    zhat = z.copy()
    schedule = make_schedule(cfg.steps)[start_step:]
    T = cfg.steps
    s = cfg.guidance_scale
    frames = [] if cfg.trace else None
    trace = [] if cfg.trace else None
    for step, t in enumerate(schedule, start=start_step):
        p_cond = model.predict_residual(z, t, cfg.prompt)
        if s == 1.0:
            p = p_cond
        else:
            p_neg = model.predict_residual(z, t, cfg.negative_prompt)
            p = p_neg + s * (p_cond - p_neg)
        zhat = z + p
        z = z + (zhat - z_gray) / T
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite latent at step {step} (t={t:.3f})")
        if cfg.trace:
            frame = _decode_merged(z, codec, gray)
            frames.append(frame)
            trace.append({"step": step, "t": t, "colorfulness": colorfulness(frame)})
    delta0 = zhat - z_gray
    z_out = scale_color(z_gray, delta0, cfg.color_scale)
    image = _decode_merged(z_out, codec, gray)
    return ColorizationResult(
        image=image, residual=delta0, gray_latent=z_gray, final_latent=z,
        config=cfg, frames=frames, trace=trace,
    )


def render_scaled(z_gray: np.ndarray, residual: np.ndarray, s_prime: float,
                  codec, gray: np.ndarray) -> np.ndarray:
    """Decode z_gray + s'*residual and merge the source lightness back.

    The cheap re-render path: no diffusion steps run. `gray` is the
    original (uncropped) input whose luma the output keeps.
    """
    gray = validate_gray(gray)
    z_out = scale_color(z_gray, residual, s_prime)
    return _decode_merged(z_out, codec, gray)


def rescale(result: ColorizationResult, s_prime: float, codec,
            gray: np.ndarray) -> np.ndarray:
    """Re-render a finished colorization at a different color scale."""
    return render_scaled(result.gray_latent, result.residual, s_prime, codec, gray)


def step_trace(result: ColorizationResult) -> list[np.ndarray]:
    """Per-step decoded frames; requires a trace-enabled run."""
    if result.frames is None:
        raise ValueError("trace was not enabled for this run")
    return result.frames
