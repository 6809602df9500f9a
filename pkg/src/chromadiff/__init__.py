"""Text-guided image colorization by cold diffusion in a latent space.

The package is organized around the pipeline stages:

- `colorspace`: pixel-space color math (luma, Lab, colorfulness).
- `codec`: latent codecs (identity and a small learned autoencoder).
- `diffusion`: the chroma-removal degradation, schedules and training.
- `denoiser`: the residual-predicting UNet and text conditioning.
- `sampler`: iterative restoration with classifier-free guidance.
- `prompts`: positive/negative prompt strategies.
- `ranker`: pairwise preference model and color-scale selection.
- `enhance`: seed/start-iteration variation grids.
- `metrics`: colorfulness, Frechet distance, Elo, PSNR/SSIM.
- `service` / `cli`: HTTP and command-line front ends.
"""

from chromadiff.colorspace import (
    colorfulness,
    load_image,
    replace_luma,
    save_image,
    to_grayscale,
)

__version__ = "0.1.0"

__all__ = [
    "colorfulness",
    "load_image",
    "replace_luma",
    "save_image",
    "to_grayscale",
    "__version__",
]
