"""Image/text embedders standing in for large pretrained towers.

Two options behind one interface (embed_image, and embed_text where
supported):

- `FeatureEmbedder`: dependency-free handcrafted features (downsampled
  pixels, channel and opponent-color statistics, colorfulness and its
  square, mean saturation). The quadratic colorfulness term is what lets
  a linear scorer represent single-peaked preferences over color scales;
  without it "closest to an ideal colorfulness" is not linearly
  representable.
- `DualTowerEmbedder`: a small contrastive text-image model trained on
  the toy corpus. Both towers L2-normalize their outputs. Half of the
  training pairs are converted to (grayscale image, hint-prefixed
  caption) so the text tower learns an anti-color direction; that is what
  makes caption-space color arithmetic meaningful.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch import nn

from chromadiff.colorspace import (
    colorfulness,
    mean_saturation,
    to_grayscale,
    gray_to_rgb,
)
from chromadiff.denoiser import Vocab

__all__ = [
    "FeatureEmbedder",
    "DualTowerEmbedder",
    "train_dual_tower",
    "GRAY_CAPTION_TEMPLATES",
]

GRAY_CAPTION_TEMPLATES = (
    "a black and white photo of {}",
    "{}, grayscale photography",
    "a monochrome picture of {}",
    "{} in b&w",
)


class FeatureEmbedder:
    """Handcrafted image features; stateless and deterministic."""

    GRID = 4

    def __init__(self):
        g = self.GRID
        self.dim = g * g * 3 + 6 + 4 + 3

    def embed_image(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 3 or img.shape[-1] != 3:
            raise ValueError(f"expected (H, W, 3), got {img.shape}")
        g = self.GRID
        rows = np.linspace(0, img.shape[0] - 1, g).astype(int)
        cols = np.linspace(0, img.shape[1] - 1, g).astype(int)
        patch = img[np.ix_(rows, cols)].ravel()
        means = img.reshape(-1, 3).mean(axis=0)
        stds = img.reshape(-1, 3).std(axis=0)
        r, gg, b = (img[..., i] * 255.0 for i in range(3))
        rg = r - gg
        yb = 0.5 * (r + gg) - b
        clr = colorfulness(img)
        return np.concatenate([
            patch,
            means, stds,
            [rg.mean() / 255.0, rg.std() / 255.0, yb.mean() / 255.0, yb.std() / 255.0],
            [clr / 100.0, (clr / 100.0) ** 2, mean_saturation(img)],
        ])


class _ImageTower(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, 16, 3, 2, 1), nn.SiLU(),
            nn.Conv2d(16, 32, 3, 2, 1), nn.SiLU(),
            nn.Conv2d(32, 32, 3, 2, 1), nn.SiLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
            nn.Linear(32, dim),
        )

    def forward(self, x):
        return nn.functional.normalize(self.net(x), dim=-1)


class _TextTower(nn.Module):
    def __init__(self, vocab: Vocab, dim: int):
        super().__init__()
        self.vocab = vocab
        self.tokens = nn.Embedding(len(vocab), dim)
        self.mlp = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, prompts: list[str]):
        pooled = []
        for p in prompts:
            ids = self.vocab.encode(p, max_len=24)
            if ids:
                pooled.append(self.tokens(torch.tensor(ids, dtype=torch.long)).mean(0))
            else:
                pooled.append(torch.zeros(self.tokens.embedding_dim))
        return nn.functional.normalize(self.mlp(torch.stack(pooled)), dim=-1)


class DualTowerEmbedder:
    """Contrastive text-image embedder with L2-normalized outputs."""

    def __init__(self, image_tower: _ImageTower, text_tower: _TextTower, dim: int):
        self.dim = dim
        self._img = image_tower.eval()
        self._txt = text_tower.eval()
        for p in (*self._img.parameters(), *self._txt.parameters()):
            p.requires_grad_(False)

    def embed_image(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 3 or img.shape[-1] != 3:
            raise ValueError(f"expected (H, W, 3), got {img.shape}")
        x = torch.from_numpy(img.transpose(2, 0, 1)[None]).float()
        with torch.no_grad():
            return self._img(x)[0].numpy().astype(np.float64)

    def embed_text(self, text: str) -> np.ndarray:
        with torch.no_grad():
            return self._txt([text])[0].numpy().astype(np.float64)

    def clip_score(self, img: np.ndarray, text: str) -> float:
        """Cosine similarity between image and caption embeddings."""
        return float(self.embed_image(img) @ self.embed_text(text))

    def save(self, path) -> None:
        path = Path(path)
        torch.save({"img": self._img.state_dict(), "txt": self._txt.state_dict()}, path)
        sidecar = {"dim": self.dim, "vocab": self._txt.vocab.words}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))

    @classmethod
    def load(cls, path) -> "DualTowerEmbedder":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        img = _ImageTower(sidecar["dim"])
        txt = _TextTower(Vocab(sidecar["vocab"]), sidecar["dim"])
        state = torch.load(path, weights_only=True)
        img.load_state_dict(state["img"])
        txt.load_state_dict(state["txt"])
        return cls(img, txt, sidecar["dim"])


def train_dual_tower(
    images: np.ndarray,
    captions: list[str],
    *,
    dim: int = 32,
    epochs: int = 10,
    batch_size: int = 128,
    lr: float = 2e-3,
    seed: int = 0,
    gray_pair_prob: float = 0.5,
    temperature: float = 0.07,
):
    """Train the dual tower with a symmetric InfoNCE objective.

    With probability `gray_pair_prob` a pair is replaced by (grayscale
    image, gray-hint caption) built from the templates above.
    Returns (embedder, history).
    """
    images = np.asarray(images, dtype=np.float64)
    if len(images) != len(captions):
        raise ValueError("images and captions must pair up")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    hint_texts = [t.format(c) for c in captions[:8] for t in GRAY_CAPTION_TEMPLATES]
    vocab = Vocab.build(list(captions) + hint_texts)
    img_tower = _ImageTower(dim)
    txt_tower = _TextTower(vocab, dim)
    opt = torch.optim.Adam([*img_tower.parameters(), *txt_tower.parameters()], lr=lr)

    n = len(images)
    batch_size = min(batch_size, n)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n - batch_size + 1, batch_size):
            idx = order[start:start + batch_size]
            imgs, texts = [], []
            for i in idx:
                if rng.random() < gray_pair_prob:
                    imgs.append(gray_to_rgb(to_grayscale(images[i])))
                    template = GRAY_CAPTION_TEMPLATES[rng.integers(len(GRAY_CAPTION_TEMPLATES))]
                    texts.append(template.format(captions[i]))
                else:
                    imgs.append(images[i])
                    texts.append(captions[i])
            x = torch.from_numpy(np.stack(imgs).transpose(0, 3, 1, 2)).float()
            e_img = img_tower(x)
            e_txt = txt_tower(texts)
            logits = e_img @ e_txt.T / temperature
            labels = torch.arange(len(idx))
            loss = 0.5 * (
                nn.functional.cross_entropy(logits, labels)
                + nn.functional.cross_entropy(logits.T, labels)
            )
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
            batches += 1
        losses.append(epoch_loss / max(batches, 1))
    return DualTowerEmbedder(img_tower, txt_tower, dim), {"loss": losses}
