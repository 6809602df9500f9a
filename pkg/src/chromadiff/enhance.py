"""Color enhancement of faded photos via seeded, late-start sampling.

A faded photo retains residual chroma. Instead of colorizing its plain
grayscale from scratch, each grid cell scales the photo's Lab AB
channels by a small seed factor, encodes that, and enters the sampling
loop at a chosen iteration; the grid of (seed, start) combinations is
returned for a human to pick from. The zero seed with start 0 is by
construction the plain colorization of the grayscale.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from chromadiff.colorspace import (
    rgb_to_hsv,
    hsv_to_rgb,
    scale_ab,
    to_grayscale,
    validate_rgb,
)
from chromadiff.sampler import SamplerConfig, colorize

__all__ = [
    "EnhanceConfig",
    "GridCell",
    "enhance_grid",
    "grid_index",
    "contact_sheet",
    "BaselineResult",
    "saturation_baseline",
]

DEFAULT_SEEDS = (0.0, 0.001, 0.003, 0.005)
DEFAULT_STARTS = (0, 1, 2, 3)


@dataclasses.dataclass(frozen=True)
class EnhanceConfig:
    chroma_seeds: tuple = DEFAULT_SEEDS
    start_steps: tuple = DEFAULT_STARTS
    sampler: SamplerConfig = dataclasses.field(default_factory=SamplerConfig)

    def __post_init__(self):
        if not self.chroma_seeds or any(s < 0 for s in self.chroma_seeds):
            raise ValueError("chroma seeds must be nonempty and >= 0")
        for k in self.start_steps:
            if not isinstance(k, (int, np.integer)) or not 0 <= k <= self.sampler.steps:
                raise ValueError(
                    f"start steps must be integers in [0, {self.sampler.steps}], got {k!r}"
                )
        if not self.start_steps:
            raise ValueError("start steps must be nonempty")


@dataclasses.dataclass
class GridCell:
    image: np.ndarray | None
    seed: float
    start: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.image is None


def _seeded_latent(faded: np.ndarray, seed: float, codec) -> np.ndarray:
    seeded = scale_ab(faded, seed)
    ph = (-seeded.shape[0]) % codec.f
    pw = (-seeded.shape[1]) % codec.f
    if ph or pw:
        seeded = np.pad(seeded, ((0, ph), (0, pw), (0, 0)), mode="symmetric")
    return codec.encode(seeded)


def enhance_grid(faded: np.ndarray, cfg: EnhanceConfig, model, codec) -> list[list[GridCell]]:
    """Render the (seeds x starts) options grid, row-major.

    A zero seed starts from the plain grayscale encoding, so the
    (0, start 0) cell is bit-identical to sampler.colorize on
    to_grayscale(faded). Cells fail independently; a failed cell keeps
    its slot with the error message attached.
    """
    faded = validate_rgb(faded)
    gray = to_grayscale(faded)
    rows = []
    for seed in cfg.chroma_seeds:
        init = None if seed == 0.0 else _seeded_latent(faded, seed, codec)
        row = []
        for start in cfg.start_steps:
            try:
                result = colorize(gray, cfg.sampler, model, codec,
                                  init_latent=init, start_step=int(start))
                row.append(GridCell(result.image, float(seed), int(start)))
            except (FloatingPointError, ValueError) as exc:
                row.append(GridCell(None, float(seed), int(start), error=str(exc)))
        rows.append(row)
    return rows


def grid_index(grid: list[list[GridCell]]) -> list[dict]:
    """Flat row-major cell manifest for file naming and UIs."""
    out = []
    for i, row in enumerate(grid):
        for j, cell in enumerate(row):
            out.append({
                "row": i, "col": j,
                "seed": cell.seed, "start": cell.start,
                "failed": cell.failed, "error": cell.error,
            })
    return out


def contact_sheet(grid: list[list[GridCell]], pad: int = 2) -> np.ndarray:
    """Assemble cells into one image; failed cells render black."""
    if not grid or not grid[0]:
        raise ValueError("empty grid")
    shapes = {c.image.shape for row in grid for c in row if c.image is not None}
    if not shapes:
        raise ValueError("every cell failed; nothing to assemble")
    if len(shapes) != 1:
        raise ValueError(f"inconsistent cell shapes {shapes}")
    h, w, _ = shapes.pop()
    n_rows, n_cols = len(grid), len(grid[0])
    sheet = np.zeros((n_rows * h + pad * (n_rows - 1),
                      n_cols * w + pad * (n_cols - 1), 3))
    for i, row in enumerate(grid):
        for j, cell in enumerate(row):
            if cell.image is not None:
                y, x = i * (h + pad), j * (w + pad)
                sheet[y:y + h, x:x + w] = cell.image
    return sheet


@dataclasses.dataclass
class BaselineResult:
    image: np.ndarray
    unreachable: bool


def saturation_baseline(faded: np.ndarray, target_mean_s: float) -> BaselineResult:
    """Uniformly rescale HSV saturation until its mean hits the target.

    The comparison baseline for enhancement: hue and value stay fixed.
    Because saturation clips at 1, the multiplier is found by bisection;
    an input without any saturation (or a target above what clipping
    allows) comes back unchanged-except-clipped and flagged unreachable.
    """
    faded = validate_rgb(faded)
    if not 0.0 <= target_mean_s <= 1.0:
        raise ValueError(f"target mean saturation must be in [0, 1], got {target_mean_s}")
    hsv = rgb_to_hsv(faded)
    s = hsv[..., 1]
    current = float(s.mean())
    if target_mean_s == 0.0:
        out = hsv.copy()
        out[..., 1] = 0.0
        return BaselineResult(hsv_to_rgb(out), unreachable=False)
    if current == 0.0:
        return BaselineResult(faded.copy(), unreachable=True)
    reachable_max = float((s > 0).mean())  # mean when every colored pixel saturates
    if target_mean_s > reachable_max - 1e-12:
        out = hsv.copy()
        out[..., 1] = np.where(s > 0, 1.0, 0.0)
        return BaselineResult(hsv_to_rgb(out), unreachable=True)

    lo, hi = 0.0, 1.0
    while float(np.clip(s * hi, 0.0, 1.0).mean()) < target_mean_s:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if float(np.clip(s * mid, 0.0, 1.0).mean()) < target_mean_s:
            lo = mid
        else:
            hi = mid
    out = hsv.copy()
    out[..., 1] = np.clip(s * hi, 0.0, 1.0)
    return BaselineResult(hsv_to_rgb(out), unreachable=False)
