"""Train the desk-scale model set used by the other demos.

Trains three artifacts on a synthetic caption-annotated corpus and saves
them under demos/artifacts/:

  denoiser.pt   residual predictor (the piece that does the colorizing)
  codec.pt      f=8 conv autoencoder (optional latent backend)
  tower.pt      dual-tower text/image embedder (CLIP stand-in)

Takes a few minutes on one CPU core; the denoiser dominates. The settings
are the smallest ones that still colorize visibly — more steps only
sharpen the colors.

Run: python3 demos/02_train_small_models.py
"""

import json
import time
from pathlib import Path

from chromadiff import toydata
from chromadiff.codec import IdentityCodec, train_conv_codec
from chromadiff.denoiser import save_denoiser
from chromadiff.diffusion import TrainConfig, train_denoiser
from chromadiff.embedders import train_dual_tower

ART = Path(__file__).parent / "artifacts"
ART.mkdir(exist_ok=True)

print("building synthetic corpus (1024 images, 32x32) ...")
images, captions = toydata.make_corpus(n=1024, size=32, seed=0)

print("\n[1/3] conv codec, 8 epochs ...")
t0 = time.time()
codec, hist = train_conv_codec(images, width=32, epochs=8, seed=0, channels=4)
codec.save(ART / "codec.pt")
print(f"  holdout reconstruction MAE {hist['holdout_mae']:.4f} ({time.time()-t0:.0f}s)")

print("\n[2/3] denoiser on the identity backend, 1200 steps ...")
t0 = time.time()
cfg = TrainConfig(learning_rate=3e-4, batch_size=32, total_steps=1200)
model, hist = train_denoiser(
    images, captions, IdentityCodec(), cfg, seed=0, base_width=24, text_dim=48,
    log_every=200,
)
save_denoiser(model, ART / "denoiser.pt")
(ART / "history.json").write_text(json.dumps(hist))
first, last = hist["loss"][:100], hist["loss"][-100:]
print(f"  loss window {sum(first)/100:.4f} -> {sum(last)/100:.4f} ({time.time()-t0:.0f}s)")

print("\n[3/3] dual-tower embedder, 6 epochs ...")
t0 = time.time()
tower, _ = train_dual_tower(images, captions, dim=32, epochs=6, seed=0)
tower.save(ART / "tower.pt")
print(f"  done ({time.time()-t0:.0f}s)")

print(f"\nartifacts in {ART}")
