"""Score colorizations the way the evaluation tables do.

Colorizes a held-out set, then reports FID (over embedder features),
mean colorfulness, set-level delta-colorfulness against ground truth,
PSNR, and luma SSIM — for both the model and the do-nothing grayscale
baseline. The model should land between the baseline and the truth on
every color axis.

Needs demos/artifacts/ from 02_train_small_models.py.

Run: python3 demos/06_metrics_report.py
"""

import sys
from pathlib import Path

import numpy as np

from chromadiff import metrics as M
from chromadiff import toydata
from chromadiff.codec import IdentityCodec
from chromadiff.colorspace import gray_to_rgb, to_grayscale
from chromadiff.denoiser import load_denoiser
from chromadiff.embedders import FeatureEmbedder
from chromadiff.sampler import SamplerConfig, colorize

ART = Path(__file__).parent / "artifacts"
if not (ART / "denoiser.pt").exists():
    sys.exit("no artifacts; run demos/02_train_small_models.py first")

model = load_denoiser(ART / "denoiser.pt")
codec = IdentityCodec()
embedder = FeatureEmbedder()

refs, captions = toydata.make_corpus(n=16, size=32, seed=777)
print("colorizing 16 held-out images ...")
preds = [
    colorize(to_grayscale(img), SamplerConfig(steps=10, prompt=cap), model, codec).image
    for img, cap in zip(refs, captions)
]
grays = [gray_to_rgb(to_grayscale(img)) for img in refs]


def feats(images):
    return np.stack([embedder.embed_image(img) for img in images])


def row(name, outs):
    fid = M.frechet_distance(feats(outs), feats(list(refs)))
    clr = M.mean_colorfulness(outs)
    dclr = M.delta_colorfulness(outs, list(refs))
    psnr = np.mean([M.psnr(o, r) for o, r in zip(outs, refs)])
    ssim = np.mean([M.ssim(to_grayscale(o), to_grayscale(r)) for o, r in zip(outs, refs)])
    print(f"{name:20} {fid:8.2f} {clr:8.1f} {dclr:8.1f} {psnr:8.2f} {ssim:8.3f}")


print(f"\n{'method':20} {'FID':>8} {'CLR':>8} {'dCLR':>8} {'PSNR':>8} {'SSIM':>8}")
row("model", preds)
row("grayscale baseline", grays)
print(f"{'ground truth':20} {'0.00':>8} {M.mean_colorfulness(list(refs)):8.1f} "
      f"{'0.0':>8} {'inf':>8} {'1.000':>8}")
