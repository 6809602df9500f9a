"""Colorize one grayscale image under different text prompts.

The same gray input gets pushed toward different colorizations purely by
the prompt, via classifier-free guidance against the shared negative
prompt. The per-step trace shows colorfulness growing as the latent walks
from the gray anchor toward the predicted color latent.

Needs demos/artifacts/ from 02_train_small_models.py.

Run: python3 demos/03_colorize_with_prompts.py
"""

import sys
from pathlib import Path

from chromadiff import toydata
from chromadiff.codec import IdentityCodec
from chromadiff.colorspace import colorfulness, save_image, to_grayscale
from chromadiff.denoiser import load_denoiser
from chromadiff.sampler import SamplerConfig, colorize

ART = Path(__file__).parent / "artifacts"
if not (ART / "denoiser.pt").exists():
    sys.exit("no artifacts; run demos/02_train_small_models.py first")

model = load_denoiser(ART / "denoiser.pt")
codec = IdentityCodec()

images, captions = toydata.make_corpus(n=8, size=32, seed=99)
gray = to_grayscale(images[0])
save_image(images[0], ART / "demo3_reference.png")
print(f"reference: {captions[0]!r} (CLR {colorfulness(images[0]):.1f})")
print(f"gray input CLR: {colorfulness(to_grayscale(images[0])[..., None].repeat(3, -1)):.1f}\n")

for prompt in ("", captions[0], "a red circle", "a blue square"):
    cfg = SamplerConfig(steps=10, prompt=prompt, trace=True)
    result = colorize(gray, cfg, model, codec)
    name = prompt.replace(" ", "_") or "unprompted"
    save_image(result.image, ART / f"demo3_{name}.png")
    ramp = " ".join(f"{rec['colorfulness']:.0f}" for rec in result.trace)
    print(f"prompt {prompt!r:24} -> CLR {colorfulness(result.image):6.1f}   per-step: {ramp}")

print(f"\nimages in {ART} (demo3_*.png)")
