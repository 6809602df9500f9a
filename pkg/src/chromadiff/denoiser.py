"""Residual-predicting UNet with time and text conditioning.

The restoration operator is a small three-resolution UNet: residual conv
blocks with a sinusoidal time embedding added per block and one
cross-attention layer at the bottleneck attending over token embeddings.
The text encoder is a word-level token embedding trained jointly with the
UNet; the empty prompt maps to a dedicated learned null embedding (the
classifier-free branch).

The output head is zero-initialized, so a fresh model predicts a zero
residual (identity restoration) for every input.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np
import torch
from torch import nn

__all__ = [
    "Vocab",
    "TextEncoder",
    "UNet",
    "Denoiser",
    "save_denoiser",
    "load_denoiser",
]

TIME_LEVELS = 101  # t in [0,1] embedded on the level grid 0..100

_WORD_RE = re.compile(r"[a-z0-9&']+")


class Vocab:
    """Word-level vocabulary. Index 0 is reserved for unknown words."""

    def __init__(self, words: list[str]):
        self.words = list(words)
        self._index = {w: i + 1 for i, w in enumerate(self.words)}

    @classmethod
    def build(cls, captions: list[str]) -> "Vocab":
        seen = {}
        for cap in captions:
            for w in _WORD_RE.findall(cap.lower()):
                seen.setdefault(w, len(seen))
        return cls(sorted(seen, key=seen.get))

    def __len__(self) -> int:
        return len(self.words) + 1

    def encode(self, text: str, max_len: int = 16) -> list[int]:
        ids = [self._index.get(w, 0) for w in _WORD_RE.findall(text.lower())]
        return ids[:max_len]


class TextEncoder(nn.Module):
    """Token embeddings for cross-attention; learned null token for ''."""

    def __init__(self, vocab: Vocab, dim: int = 64, max_len: int = 16):
        super().__init__()
        self.vocab = vocab
        self.dim = dim
        self.max_len = max_len
        self.tokens = nn.Embedding(len(vocab), dim)
        self.positions = nn.Embedding(max_len, dim)
        self.null = nn.Parameter(torch.randn(1, dim) * 0.02)

    def forward(self, prompts: list[str]) -> torch.Tensor:
        """Encode a batch of prompts to (B, L, dim) token sequences.

        Sequences are padded to the longest prompt in the batch by
        repeating the null embedding, which doubles as the embedding of
        the empty prompt.
        """
        batch_ids = [self.vocab.encode(p, self.max_len) for p in prompts]
        L = max((len(ids) for ids in batch_ids), default=0) or 1
        out = self.null.expand(len(prompts), L, self.dim).clone()
        for b, ids in enumerate(batch_ids):
            if ids:
                idx = torch.tensor(ids, dtype=torch.long)
                pos = torch.arange(len(ids), dtype=torch.long)
                out[b, : len(ids)] = self.tokens(idx) + self.positions(pos)
        return out


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal features of the timestep, shape (B, dim).

    Continuous t in [0,1] is first quantized to the 101-level grid
    (level = round(100*t)); the sinusoid runs over levels.
    """
    half = dim // 2
    levels = torch.round(t * (TIME_LEVELS - 1))
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=t.dtype) / half)
    args = levels[:, None] * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=-1)


class _ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, t_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, 1, 1)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1)
        self.t_proj = nn.Linear(t_dim, c_out)
        self.skip = nn.Conv2d(c_in, c_out, 1) if c_in != c_out else nn.Identity()
        self.norm1 = nn.GroupNorm(8, c_out)
        self.norm2 = nn.GroupNorm(8, c_out)

    def forward(self, x, t_emb):
        h = nn.functional.silu(self.norm1(self.conv1(x)))
        h = h + self.t_proj(t_emb)[:, :, None, None]
        h = nn.functional.silu(self.norm2(self.conv2(h)))
        return h + self.skip(x)


class _CrossAttention(nn.Module):
    """Single-head attention from latent positions to prompt tokens."""

    def __init__(self, channels: int, text_dim: int):
        super().__init__()
        self.q = nn.Linear(channels, channels)
        self.k = nn.Linear(text_dim, channels)
        self.v = nn.Linear(text_dim, channels)
        self.out = nn.Linear(channels, channels)
        self.scale = channels**-0.5

    def forward(self, x, ctx):
        b, c, h, w = x.shape
        q = self.q(x.flatten(2).transpose(1, 2))
        k = self.k(ctx)
        v = self.v(ctx)
        attn = torch.softmax(q @ k.transpose(1, 2) * self.scale, dim=-1)
        y = self.out(attn @ v).transpose(1, 2).reshape(b, c, h, w)
        return x + y


class UNet(nn.Module):
    """Three-resolution UNet mapping (z_t, t, tokens) to a residual."""

    def __init__(self, channels: int = 3, base: int = 32, text_dim: int = 64,
                 time_dim: int = 64):
        super().__init__()
        self.channels = channels
        self.base = base
        self.text_dim = text_dim
        self.time_dim = time_dim
        b = base
        self.time_mlp = nn.Sequential(
            nn.Linear(time_dim, time_dim), nn.SiLU(), nn.Linear(time_dim, time_dim)
        )
        self.conv_in = nn.Conv2d(channels, b, 3, 1, 1)
        self.down1 = _ResBlock(b, b, time_dim)
        self.pool1 = nn.Conv2d(b, 2 * b, 3, 2, 1)
        self.down2 = _ResBlock(2 * b, 2 * b, time_dim)
        self.pool2 = nn.Conv2d(2 * b, 2 * b, 3, 2, 1)
        self.mid1 = _ResBlock(2 * b, 2 * b, time_dim)
        self.attn = _CrossAttention(2 * b, text_dim)
        self.mid2 = _ResBlock(2 * b, 2 * b, time_dim)
        self.up2 = nn.Upsample(scale_factor=2, mode="nearest")
        self.dec2 = _ResBlock(4 * b, 2 * b, time_dim)
        self.up1 = nn.Upsample(scale_factor=2, mode="nearest")
        self.dec1 = _ResBlock(3 * b, b, time_dim)
        self.head = nn.Conv2d(b, channels, 3, 1, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, z_t: torch.Tensor, t: torch.Tensor, ctx: torch.Tensor) -> torch.Tensor:
        t_emb = self.time_mlp(sinusoidal_embedding(t, self.time_dim))
        h0 = self.conv_in(z_t)
        h1 = self.down1(h0, t_emb)
        h2 = self.down2(self.pool1(h1), t_emb)
        m = self.mid1(self.pool2(h2), t_emb)
        m = self.attn(m, ctx)
        m = self.mid2(m, t_emb)
        u2 = self.dec2(torch.cat([self.up2(m), h2], dim=1), t_emb)
        u1 = self.dec1(torch.cat([self.up1(u2), h1], dim=1), t_emb)
        return self.head(u1)


class Denoiser:
    """Inference wrapper pairing a UNet with its text encoder.

    Presents a numpy interface: latents in, residuals out, prompts as
    plain strings. All torch details (dtype, grad mode) stay inside.
    """

    def __init__(self, unet: UNet, text_encoder: TextEncoder):
        self.unet = unet
        self.text_encoder = text_encoder

    def eval(self) -> "Denoiser":
        self.unet.eval()
        self.text_encoder.eval()
        return self

    def embed_text(self, prompt: str) -> np.ndarray:
        """Token-sequence embedding of one prompt, shape (L, dim)."""
        with torch.no_grad():
            return self.text_encoder([prompt])[0].numpy().astype(np.float64)

    def predict_residual(self, z_t: np.ndarray, t: float, prompt: str) -> np.ndarray:
        """Predicted residual toward the clean color latent.

        Args:
            z_t: degraded latent, shape (C, h, w).
            t: degradation level in [0, 1].
            prompt: conditioning text; '' selects the null embedding.
        """
        z_t = np.asarray(z_t, dtype=np.float64)
        if z_t.ndim != 3 or z_t.shape[0] != self.unet.channels:
            raise ValueError(f"expected ({self.unet.channels}, h, w) latent, got {z_t.shape}")
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {t}")
        with torch.no_grad():
            zt = torch.from_numpy(z_t[None]).float()
            tt = torch.tensor([t], dtype=torch.float32)
            ctx = self.text_encoder([prompt])
            out = self.unet(zt, tt, ctx)
        return out[0].numpy().astype(np.float64)

    def parameters(self):
        yield from self.unet.parameters()
        yield from self.text_encoder.parameters()

    def train_mode(self) -> "Denoiser":
        self.unet.train()
        self.text_encoder.train()
        return self


def save_denoiser(model: Denoiser, path) -> None:
    """Write weights plus an architecture sidecar, so loading never guesses."""
    path = Path(path)
    torch.save(
        {"unet": model.unet.state_dict(), "text": model.text_encoder.state_dict()},
        path,
    )
    arch = {
        "channels": model.unet.channels,
        "base": model.unet.base,
        "text_dim": model.unet.text_dim,
        "time_dim": model.unet.time_dim,
        "vocab": model.text_encoder.vocab.words,
        "max_len": model.text_encoder.max_len,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(arch))


def load_denoiser(path) -> Denoiser:
    path = Path(path)
    arch = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    unet = UNet(
        channels=arch["channels"], base=arch["base"],
        text_dim=arch["text_dim"], time_dim=arch["time_dim"],
    )
    enc = TextEncoder(Vocab(arch["vocab"]), dim=arch["text_dim"], max_len=arch["max_len"])
    state = torch.load(path, weights_only=True)
    unet.load_state_dict(state["unet"])
    enc.load_state_dict(state["text"])
    return Denoiser(unet, enc).eval()
