"""Color enhancement of a faded photo: the seeds x starts option grid.

A faded photo still carries residual color. Each grid cell seeds the
diffusion with an amplified version of that residual (chroma seed) and
enters the loop at a later step (start), trading faithfulness against
how much the model repaints. Seed 0 / start 0 is plain colorization of
the grayscale; later starts keep more of the original.

Needs demos/artifacts/ from 02_train_small_models.py.

Run: python3 demos/05_enhance_faded_photo.py
"""

import sys
from pathlib import Path

from chromadiff import toydata
from chromadiff.codec import IdentityCodec
from chromadiff.colorspace import colorfulness, save_image, scale_chroma
from chromadiff.denoiser import load_denoiser
from chromadiff.enhance import EnhanceConfig, contact_sheet, enhance_grid
from chromadiff.sampler import SamplerConfig

ART = Path(__file__).parent / "artifacts"
if not (ART / "denoiser.pt").exists():
    sys.exit("no artifacts; run demos/02_train_small_models.py first")

model = load_denoiser(ART / "denoiser.pt")
codec = IdentityCodec()

images, _ = toydata.make_corpus(n=2, size=32, seed=123)
faded = scale_chroma(images[0], 0.25)
save_image(faded, ART / "demo5_faded.png")
print(f"original CLR {colorfulness(images[0]):.1f}, faded to {colorfulness(faded):.1f}\n")

cfg = EnhanceConfig(sampler=SamplerConfig(steps=10))
grid = enhance_grid(faded, cfg, model, codec)

print("colorfulness per cell (rows: chroma seed, cols: start step)")
print("          " + "".join(f"start {k:<4}" for k in cfg.start_steps))
for row, seed in zip(grid, cfg.chroma_seeds):
    cells = "".join(
        f"{colorfulness(c.image):8.1f}  " if not c.failed else "  failed  "
        for c in row
    )
    print(f"seed {seed:<6}{cells}")

save_image(contact_sheet(grid), ART / "demo5_sheet.png")
print(f"\ncontact sheet: {ART / 'demo5_sheet.png'}")
