"""Synthetic caption-annotated color images for desk-scale training.

Images are flat-shaded shapes (circle, square, stripes) drawn from an
8-color palette whose entries have well-separated BT.601 lumas, so the
gray rendition of a scene still identifies its colors. Captions are short
templated phrases naming the colors and shapes.

A corpus on disk is a directory of PNG files plus `captions.jsonl` with
one {"file": ..., "caption": ...} record per line.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from chromadiff.colorspace import load_image, save_image, to_grayscale

__all__ = ["PALETTE", "make_corpus", "write_corpus", "read_corpus", "gray_pairs"]

# name -> sRGB; BT.601 lumas are pairwise at least 0.08 apart, so luma alone
# pins down the palette entry
PALETTE = {
    "blue": (0.0, 0.0, 1.0),
    "purple": (0.35, 0.0, 0.9),
    "red": (1.0, 0.0, 0.0),
    "magenta": (1.0, 0.0, 1.0),
    "green": (0.0, 0.85, 0.0),
    "orange": (1.0, 0.5, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
}

_NAMES = list(PALETTE)
_SHAPES = ("circle", "square", "stripes")


def _draw_shape(img: np.ndarray, shape: str, color, rng: np.random.Generator) -> None:
    size = img.shape[0]
    yy, xx = np.mgrid[0:size, 0:size]
    if shape == "circle":
        r = rng.integers(size // 5, size // 3 + 1)
        cy, cx = rng.integers(r, size - r + 1, size=2)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    elif shape == "square":
        h = rng.integers(size // 6, size // 3 + 1)
        cy, cx = rng.integers(h, size - h + 1, size=2)
        mask = (np.abs(yy - cy) <= h) & (np.abs(xx - cx) <= h)
    else:
        period = int(rng.integers(size // 8, size // 4 + 1))
        axis = xx if rng.random() < 0.5 else yy
        mask = (axis // period) % 2 == 0
    img[mask] = color


def _caption(bg: str, shapes: list[tuple[str, str]], rng: np.random.Generator) -> str:
    def noun(color, shape):
        if shape == "stripes":
            return f"{color} stripes"
        return f"a {color} {shape}"

    if not shapes:
        return rng.choice([f"a solid {bg} image", f"a plain {bg} background"])
    parts = " and ".join(noun(c, s) for s, c in shapes)
    template = rng.choice([
        "{parts} on a {bg} background",
        "{parts} over {bg}",
        "a picture of {parts} on {bg}",
    ])
    return template.format(parts=parts, bg=bg)


def make_corpus(n: int = 2048, size: int = 32, seed: int = 0):
    """Generate `n` images with captions.

    Returns (images, captions): a float array of shape (n, size, size, 3)
    in [0, 1] and a list of caption strings. Deterministic in `seed`.
    """
    rng = np.random.default_rng(seed)
    images = np.empty((n, size, size, 3))
    captions = []
    for i in range(n):
        color_idx = rng.permutation(len(_NAMES))
        bg = _NAMES[color_idx[0]]
        img = np.tile(np.array(PALETTE[bg]), (size, size, 1))
        n_shapes = int(rng.choice([0, 1, 1, 1, 2], p=[0.08, 0.3, 0.3, 0.12, 0.2]))
        shapes = []
        for k in range(n_shapes):
            shape = str(rng.choice(_SHAPES))
            color = _NAMES[color_idx[k + 1]]
            _draw_shape(img, shape, PALETTE[color], rng)
            shapes.append((shape, color))
        images[i] = img
        captions.append(str(_caption(bg, shapes, rng)))
    return images, captions


def write_corpus(directory, images: np.ndarray, captions: list[str]) -> None:
    """Write images as PNGs plus a captions.jsonl manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "captions.jsonl", "w") as fh:
        for i, (img, caption) in enumerate(zip(images, captions)):
            name = f"{i:05d}.png"
            save_image(img, directory / name)
            fh.write(json.dumps({"file": name, "caption": caption}) + "\n")


def read_corpus(directory):
    """Read a corpus directory back to (images, captions)."""
    directory = Path(directory)
    images = []
    captions = []
    with open(directory / "captions.jsonl") as fh:
        for line in fh:
            rec = json.loads(line)
            images.append(load_image(directory / rec["file"]))
            captions.append(rec["caption"])
    if not images:
        raise ValueError(f"empty corpus in {directory}")
    return np.stack(images), captions


def gray_pairs(images: np.ndarray) -> np.ndarray:
    """Grayscale renditions of a batch, shape (N, H, W)."""
    return np.stack([to_grayscale(img) for img in images])
