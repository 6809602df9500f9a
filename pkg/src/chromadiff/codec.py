"""Latent codecs: the encoder/decoder pair that defines the diffusion space.

Two interchangeable backends:

- `IdentityCodec` (f=1, C=3): images are their own latents, layout
  transposed to channel-first. Exact inverse; keeps every latent-space
  test independent of autoencoder quality.
- `ConvCodec` (f=8, C=4): a small convolutional autoencoder trained on
  the toy corpus with reconstruction loss. Encoding is deterministic (no
  posterior sampling) and the weights stay frozen once training ends.

Latents are channel-first numpy arrays of shape (C, H/f, W/f). The color
residual of an image is encode(color) - encode(gray); adding a scaled
residual back to the gray latent and decoding is the linear color walk
the probe below quantifies.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np
import torch
from torch import nn

from chromadiff.colorspace import colorfulness, gray_to_rgb, to_grayscale
from chromadiff.metrics import spearman

__all__ = [
    "IdentityCodec",
    "ConvCodec",
    "train_conv_codec",
    "color_latent",
    "linearity_probe",
    "ProbeReport",
    "load_codec",
]

PROBE_SCALES = tuple(np.round(np.arange(0.0, 1.41, 0.2), 10))


def _as_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return gray_to_rgb(img)
    if img.ndim == 3 and img.shape[-1] == 3:
        return img
    raise ValueError(f"expected (H, W, 3) or (H, W), got {img.shape}")


class IdentityCodec:
    """f=1, C=3 backend: the latent is the image itself, channel-first."""

    kind = "identity"
    f = 1
    channels = 3

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = _as_rgb(img)
        if not np.all(np.isfinite(img)):
            raise ValueError("image contains non-finite values")
        return np.ascontiguousarray(img.transpose(2, 0, 1))

    def decode(self, z: np.ndarray, clamp: bool = True) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 3 or z.shape[0] != self.channels:
            raise ValueError(f"expected ({self.channels}, H, W) latent, got {z.shape}")
        img = z.transpose(1, 2, 0)
        return np.clip(img, 0.0, 1.0) if clamp else img


class _ConvAE(nn.Module):
    def __init__(self, channels: int = 4, width: int = 48):
        super().__init__()
        w = width
        self.enc = nn.Sequential(
            nn.Conv2d(3, w, 3, 2, 1), nn.SiLU(),
            nn.Conv2d(w, 2 * w, 3, 2, 1), nn.SiLU(),
            nn.Conv2d(2 * w, 2 * w, 3, 2, 1), nn.SiLU(),
            nn.Conv2d(2 * w, channels, 1),
        )
        self.dec = nn.Sequential(
            nn.Conv2d(channels, 2 * w, 1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(2 * w, 2 * w, 3, 1, 1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(2 * w, w, 3, 1, 1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(w, w, 3, 1, 1), nn.SiLU(),
            nn.Conv2d(w, 3, 3, 1, 1),
        )

    def forward(self, x):
        return self.dec(self.enc(x))


class ConvCodec:
    """f=8, C=4 learned backend wrapping a small conv autoencoder."""

    kind = "learned-autoencoder"
    f = 8

    def __init__(self, module: _ConvAE, channels: int = 4, width: int = 48,
                 corpus_hash: str = ""):
        self.channels = channels
        self.width = width
        self.corpus_hash = corpus_hash
        self._net = module.eval()
        for p in self._net.parameters():
            p.requires_grad_(False)

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = _as_rgb(img)
        h, w = img.shape[:2]
        if h % self.f or w % self.f:
            raise ValueError(f"image dims {h}x{w} not divisible by f={self.f}")
        x = torch.from_numpy(img.transpose(2, 0, 1)[None]).float()
        with torch.no_grad():
            z = self._net.enc(x)
        return z[0].numpy().astype(np.float64)

    def decode(self, z: np.ndarray, clamp: bool = True) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 3 or z.shape[0] != self.channels:
            raise ValueError(f"expected ({self.channels}, h, w) latent, got {z.shape}")
        zt = torch.from_numpy(z[None]).float()
        with torch.no_grad():
            x = self._net.dec(zt)
        img = x[0].numpy().astype(np.float64).transpose(1, 2, 0)
        return np.clip(img, 0.0, 1.0) if clamp else img

    def save(self, path) -> None:
        path = Path(path)
        torch.save(self._net.state_dict(), path)
        sidecar = {
            "kind": self.kind,
            "f": self.f,
            "C": self.channels,
            "width": self.width,
            "corpus_hash": self.corpus_hash,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=1))

    @classmethod
    def load(cls, path) -> "ConvCodec":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        net = _ConvAE(channels=sidecar["C"], width=sidecar["width"])
        net.load_state_dict(torch.load(path, weights_only=True))
        return cls(net, channels=sidecar["C"], width=sidecar["width"],
                   corpus_hash=sidecar["corpus_hash"])


def load_codec(kind: str, path=None):
    """Instantiate a backend by name ('identity' or a checkpoint path)."""
    if kind == "identity":
        return IdentityCodec()
    if kind == "learned-autoencoder":
        if path is None:
            raise ValueError("learned backend needs a checkpoint path")
        return ConvCodec.load(path)
    raise ValueError(f"unknown codec kind {kind!r}")


_LUMA_T = torch.tensor([0.299, 0.587, 0.114]).view(1, 3, 1, 1)


def _chroma_scale_batch(x: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
    # s*x + (1-s)*gray, per sample; keeps luma fixed for any s
    gray = (x * _LUMA_T).sum(1, keepdim=True)
    return s * x + (1.0 - s) * gray


def corpus_hash(images: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(images).tobytes()).hexdigest()[:16]


def train_conv_codec(
    images: np.ndarray,
    *,
    epochs: int = 40,
    batch_size: int = 128,
    lr: float = 2e-3,
    seed: int = 0,
    channels: int = 4,
    width: int = 48,
    holdout: int = 128,
    chroma_augment: bool = True,
):
    """Train the learned backend on an (N, H, W, 3) image array.

    Samples are augmented with random chroma scaling s ~ U(0, 1.2) (70% of
    the batch) so that every point on the gray-to-color latent segment is
    in-distribution for the decoder; without it the linearity probe has no
    reason to hold on a learned backend.

    Returns (codec, history) where history carries per-epoch training loss
    and the final held-out reconstruction MAE.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4 or images.shape[-1] != 3:
        raise ValueError("need an (N, H, W, 3) image array")
    if len(images) <= holdout:
        raise ValueError("not enough images for the holdout split")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    x_all = torch.from_numpy(images.transpose(0, 3, 1, 2)).float()
    x_train, x_hold = x_all[:-holdout], x_all[-holdout:]

    net = _ConvAE(channels=channels, width=width)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    losses = []
    n = len(x_train)
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            batch = x_train[idx]
            if chroma_augment:
                s = torch.from_numpy(rng.uniform(0.0, 1.2, size=(len(idx), 1, 1, 1))).float()
                keep = torch.from_numpy(rng.random((len(idx), 1, 1, 1)) < 0.3)
                s = torch.where(keep, torch.ones_like(s), s)
                batch = _chroma_scale_batch(batch, s)
            recon = net(batch)
            z = net.enc(batch)
            loss = nn.functional.mse_loss(recon, batch) + 1e-4 * z.pow(2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
        losses.append(epoch_loss / n)

    net.eval()
    with torch.no_grad():
        hold_mae = float((net(x_hold) - x_hold).abs().mean())
    codec = ConvCodec(net, channels=channels, width=width, corpus_hash=corpus_hash(images))
    return codec, {"train_loss": losses, "holdout_mae": hold_mae}


# --- color-latent analysis ---------------------------------------------------


def color_latent(z_color: np.ndarray, z_gray: np.ndarray) -> np.ndarray:
    """Residual between a color latent and its gray counterpart."""
    z_color = np.asarray(z_color, dtype=np.float64)
    z_gray = np.asarray(z_gray, dtype=np.float64)
    if z_color.shape != z_gray.shape:
        raise ValueError(f"shape mismatch {z_color.shape} vs {z_gray.shape}")
    return z_color - z_gray


@dataclasses.dataclass
class ProbeReport:
    scales: list[float]
    mean_colorfulness: list[float]
    rank_correlation: float


def linearity_probe(images, codec, scales=PROBE_SCALES) -> ProbeReport:
    """Walk decode(z_gray + s*residual) over scales and correlate with CLR.

    Decoding is done without the final clamp so the identity backend stays
    a strictly linear map (colorfulness there is exactly s times the
    source image's, giving rank correlation 1 by construction).
    """
    images = list(images)
    if len(images) < 10:
        raise ValueError("probe needs at least 10 images")
    scales = [float(s) for s in scales]
    if len(scales) < 2 or min(scales) < 0 or max(scales) > 1.5:
        raise ValueError("scales must be a grid within [0, 1.5]")
    per_scale = []
    residuals = []
    grays = []
    for img in images:
        z_color = codec.encode(img)
        z_gray = codec.encode(to_grayscale(img))
        grays.append(z_gray)
        residuals.append(color_latent(z_color, z_gray))
    for s in scales:
        vals = [
            colorfulness(codec.decode(zg + s * d, clamp=False))
            for zg, d in zip(grays, residuals)
        ]
        per_scale.append(float(np.mean(vals)))
    rho = spearman(scales, per_scale)
    return ProbeReport(scales=scales, mean_colorfulness=per_scale, rank_correlation=rho)
