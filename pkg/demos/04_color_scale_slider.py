"""The cheap color-intensity slider: one diffusion run, many renders.

Diffusion produces a color residual once; re-rendering at a different
color scale is a single latent add + decode, no denoiser involved. This
script times both paths to show why the interactive slider can afford to
re-render on every tick.

Needs demos/artifacts/ from 02_train_small_models.py.

Run: python3 demos/04_color_scale_slider.py
"""

import sys
import time
from pathlib import Path

from chromadiff import toydata
from chromadiff.codec import IdentityCodec
from chromadiff.colorspace import colorfulness, save_image, to_grayscale
from chromadiff.denoiser import load_denoiser
from chromadiff.sampler import SamplerConfig, colorize, rescale

ART = Path(__file__).parent / "artifacts"
if not (ART / "denoiser.pt").exists():
    sys.exit("no artifacts; run demos/02_train_small_models.py first")

model = load_denoiser(ART / "denoiser.pt")
codec = IdentityCodec()
images, captions = toydata.make_corpus(n=4, size=32, seed=42)
gray = to_grayscale(images[1])

t0 = time.perf_counter()
result = colorize(gray, SamplerConfig(steps=10, prompt=captions[1]), model, codec)
full_run = time.perf_counter() - t0
print(f"full diffusion run: {full_run*1000:.0f} ms\n")

print("scale  CLR      render time")
for s in (0.0, 0.4, 0.8, 1.2, 1.6, 2.0):
    t0 = time.perf_counter()
    img = rescale(result, s, codec, gray)
    dt = time.perf_counter() - t0
    save_image(img, ART / f"demo4_scale_{s:.1f}.png")
    print(f" {s:3.1f}  {colorfulness(img):6.1f}   {dt*1000:6.1f} ms")

print("\nscale 0.0 is the gray input back again; >1 exaggerates.")
print(f"images in {ART} (demo4_*.png)")
