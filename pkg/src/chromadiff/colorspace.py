"""Pixel-space color math.

Images are float arrays, channel-last, values in [0, 1]. Grayscale images
are 2-D (H, W). All conversions assume the sRGB transfer curve and the D65
white point; luma projection uses the ITU-R BT.601 coefficients.

The colorfulness statistic is reported on the conventional 8-bit scale
(inputs multiplied by 255 before the opponent-color statistics), so values
are comparable to the ranges commonly quoted for natural images (vivid
photographs land around 40-70, grays at 0).
"""

from __future__ import annotations

import numpy as np
from PIL import Image

__all__ = [
    "InputValidationError",
    "to_grayscale",
    "gray_to_rgb",
    "replace_luma",
    "scale_chroma",
    "scale_ab",
    "colorfulness",
    "rgb_to_lab",
    "lab_to_rgb",
    "lab_to_rgb_gamut_safe",
    "rgb_to_hsv",
    "hsv_to_rgb",
    "load_image",
    "save_image",
]

# BT.601 luma coefficients, applied to gamma-encoded RGB.
_LUMA = np.array([0.299, 0.587, 0.114])

# sRGB -> XYZ (D65), IEC 61966-2-1.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# white point taken from the matrix rows (RGB white -> exactly neutral Lab)
_WHITE_D65 = _RGB_TO_XYZ.sum(axis=1)

# Lab round-trip tolerance, in [0,1] RGB units.
LAB_ROUNDTRIP_TOL = 1e-3


class InputValidationError(ValueError):
    """Raised when an image fails its basic invariants."""


def _check_finite(pixels: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(pixels)):
        raise InputValidationError(f"{name} contains non-finite values")


def validate_rgb(img: np.ndarray, name: str = "image", min_size: int | None = None) -> np.ndarray:
    """Validate an RGB image array and return it as float64.

    Checks shape (H, W, 3), finiteness and the [0, 1] value range (a small
    epsilon is tolerated and clipped away).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise InputValidationError(f"{name} must have shape (H, W, 3), got {img.shape}")
    _check_finite(img, name)
    if img.min() < -1e-6 or img.max() > 1 + 1e-6:
        raise InputValidationError(
            f"{name} values must lie in [0, 1], got range [{img.min():.4g}, {img.max():.4g}]"
        )
    if min_size is not None and (img.shape[0] < min_size or img.shape[1] < min_size):
        raise InputValidationError(
            f"{name} must be at least {min_size}x{min_size}, got {img.shape[0]}x{img.shape[1]}"
        )
    return np.clip(img, 0.0, 1.0)


def validate_gray(img: np.ndarray, name: str = "gray image") -> np.ndarray:
    """Validate a single-channel gray image and return it as float64."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise InputValidationError(f"{name} must have shape (H, W), got {img.shape}")
    _check_finite(img, name)
    if img.min() < -1e-6 or img.max() > 1 + 1e-6:
        raise InputValidationError(f"{name} values must lie in [0, 1]")
    return np.clip(img, 0.0, 1.0)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Project an RGB image onto its BT.601 luma channel.

    Idempotent on already-gray content: a gray image replicated to three
    channels maps back to itself (the coefficients sum to 1).
    """
    img = validate_rgb(img)
    return img @ _LUMA


def gray_to_rgb(gray: np.ndarray) -> np.ndarray:
    """Replicate a single-channel gray image to three channels."""
    gray = validate_gray(gray)
    return np.repeat(gray[..., None], 3, axis=-1)


# --- sRGB <-> CIE Lab -------------------------------------------------------


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    # negative linear values can appear for out-of-gamut Lab points
    sign = np.sign(c)
    c = np.abs(c)
    out = np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1 / 2.4) - 0.055)
    return sign * out

_LAB_DELTA = 6.0 / 29.0


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    # t*t*t instead of t**3: numpy routes the latter through pow, which is
    # an order of magnitude slower and this sits inside the gamut search loop
    return np.where(t > _LAB_DELTA, t * t * t, 3 * _LAB_DELTA**2 * (t - 4.0 / 29.0))


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) sRGB image in [0,1] to CIE Lab (D65).

    Returns an (H, W, 3) array with L in [0, 100] and a, b roughly in
    [-128, 127].
    """
    img = np.asarray(img, dtype=np.float64)
    xyz = _srgb_to_linear(img) @ _RGB_TO_XYZ.T
    fxyz = _lab_f(xyz / _WHITE_D65)
    L = 116.0 * fxyz[..., 1] - 16.0
    a = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    b = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Convert CIE Lab (D65) to sRGB. Out-of-gamut values are NOT clipped."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _WHITE_D65
    return _linear_to_srgb(xyz @ _XYZ_TO_RGB.T)


def lab_to_rgb_gamut_safe(lab: np.ndarray) -> np.ndarray:
    """Convert Lab to sRGB, shrinking chroma of out-of-gamut pixels.

    Pixels whose (L, a, b) fall outside the sRGB cube have their (a, b)
    scaled down (binary search) until they fit, which keeps L intact; plain
    clipping would shift the lightness channel. The neutral axis (a=b=0) is
    always in gamut for L in [0, 100], so the search is well posed.
    """
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _WHITE_D65
    lin = xyz @ _XYZ_TO_RGB.T
    eps = 1e-9
    bad = np.any((lin < -eps) | (lin > 1 + eps), axis=-1)
    if np.any(bad):
        # The sRGB transfer curve is monotone, so testing gamut membership on
        # linear values is equivalent and keeps the expensive gamma out of
        # the search loop. L only depends on fy, which the chroma scale never
        # touches, so lightness survives exactly.
        fy_b = fy[bad]
        da = lab[..., 1][bad] / 500.0
        db = lab[..., 2][bad] / 200.0
        y_lin = _lab_f_inv(fy_b) * _WHITE_D65[1]
        m = _XYZ_TO_RGB
        base_r = m[0, 1] * y_lin
        base_g = m[1, 1] * y_lin
        base_b = m[2, 1] * y_lin

        def _channels(c):
            x = _lab_f_inv(fy_b + c * da) * _WHITE_D65[0]
            z = _lab_f_inv(fy_b - c * db) * _WHITE_D65[2]
            return (
                m[0, 0] * x + base_r + m[0, 2] * z,
                m[1, 0] * x + base_g + m[1, 2] * z,
                m[2, 0] * x + base_b + m[2, 2] * z,
            )

        lo = np.zeros_like(fy_b)
        hi = np.ones_like(fy_b)
        # 2^-22 on a chroma factor in [0,1] is far below 8-bit quantization
        for _ in range(22):
            mid = 0.5 * (lo + hi)
            r, g, b = _channels(mid)
            ok = (
                (r >= -eps) & (r <= 1 + eps)
                & (g >= -eps) & (g <= 1 + eps)
                & (b >= -eps) & (b <= 1 + eps)
            )
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        lin[bad] = np.stack(_channels(lo), axis=-1)
    return np.clip(_linear_to_srgb(lin), 0.0, 1.0)


def replace_luma(colorized: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Replace the L channel (CIE Lab) of `colorized` with that of `source`.

    The chroma (a, b) channels come from `colorized`; the lightness comes
    from the gray image `source`. Chroma that would leave the sRGB gamut at
    the new lightness is shrunk rather than clipped, so the output's L
    channel matches the source within the Lab round-trip tolerance.

    Args:
        colorized: (H, W, 3) RGB image supplying chroma.
        source: (H, W) gray image supplying lightness.
    """
    colorized = validate_rgb(colorized, "colorized")
    source = validate_gray(source, "source")
    if colorized.shape[:2] != source.shape:
        raise InputValidationError(
            f"dimension mismatch: colorized {colorized.shape[:2]} vs source {source.shape}"
        )
    lab = rgb_to_lab(colorized)
    # gray pixels sit on the neutral axis, where L collapses to a single
    # transfer-curve evaluation; skips two redundant channel conversions
    lab[..., 0] = 116.0 * _lab_f(_srgb_to_linear(source)) - 16.0
    return lab_to_rgb_gamut_safe(lab)


def scale_chroma(img: np.ndarray, s: float) -> np.ndarray:
    """Interpolate (or extrapolate) between an image and its grayscale.

    Returns clip(s*x + (1-s)*x', 0, 1) where x' is the gray version of x
    replicated to three channels. s=1 is the identity, s=0 is grayscale,
    s>1 exaggerates chroma (clamped into range rather than rejected).
    """
    if not np.isfinite(s):
        raise InputValidationError("scale must be finite")
    img = validate_rgb(img)
    gray = gray_to_rgb(img @ _LUMA)
    return np.clip(s * img + (1.0 - s) * gray, 0.0, 1.0)


def scale_ab(img: np.ndarray, factor: float) -> np.ndarray:
    """Multiply the a, b channels of an image (in Lab space) by `factor`."""
    if not np.isfinite(factor) or factor < 0:
        raise InputValidationError("ab factor must be finite and >= 0")
    img = validate_rgb(img)
    lab = rgb_to_lab(img)
    lab[..., 1] *= factor
    lab[..., 2] *= factor
    return lab_to_rgb_gamut_safe(lab)


def colorfulness(img: np.ndarray) -> float:
    """Colorfulness statistic of an image (Hasler-Suesstrunk).

    Computed on the 8-bit scale: with R, G, B in [0, 255], rg = R - G and
    yb = (R + G)/2 - B, the statistic is

        sqrt(std(rg)^2 + std(yb)^2) + 0.3 * sqrt(mean(rg)^2 + mean(yb)^2)

    Pure grays score exactly 0. Invariant under spatial permutation of the
    pixels (it only sees the opponent-color distribution).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise InputValidationError(f"image must have shape (H, W, 3), got {img.shape}")
    _check_finite(img, "image")
    r, g, b = (img[..., i] * 255.0 for i in range(3))
    rg = r - g
    yb = 0.5 * (r + g) - b
    sigma = np.hypot(rg.std(), yb.std())
    mu = np.hypot(rg.mean(), yb.mean())
    return float(sigma + 0.3 * mu)


# --- HSV (used by the saturation filter and the enhancement baseline) -------


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Convert (H, W, 3) RGB in [0,1] to HSV, all channels in [0,1]."""
    img = np.asarray(img, dtype=np.float64)
    maxc = img.max(axis=-1)
    minc = img.min(axis=-1)
    v = maxc
    spread = maxc - minc
    s = np.where(maxc > 0, spread / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe = np.where(spread > 0, spread, 1.0)
    rc = (maxc - img[..., 0]) / safe
    gc = (maxc - img[..., 1]) / safe
    bc = (maxc - img[..., 2]) / safe
    h = np.where(
        img[..., 0] == maxc,
        bc - gc,
        np.where(img[..., 1] == maxc, 2.0 + rc - bc, 4.0 + gc - rc),
    )
    h = np.where(spread > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Convert (H, W, 3) HSV in [0,1] back to RGB in [0,1]."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        (v, t, p),
        (q, v, p),
        (p, v, t),
        (p, q, v),
        (t, p, v),
        (v, p, q),
    ]
    r = np.select([i == k for k in range(6)], [c[0] for c in choices])
    g = np.select([i == k for k in range(6)], [c[1] for c in choices])
    b = np.select([i == k for k in range(6)], [c[2] for c in choices])
    return np.stack([r, g, b], axis=-1)


def mean_saturation(img: np.ndarray) -> float:
    """Mean HSV saturation of an image."""
    return float(rgb_to_hsv(validate_rgb(img))[..., 1].mean())


# --- 8-bit I/O boundary ------------------------------------------------------


def load_image(path, gray: bool = False) -> np.ndarray:
    """Load a PNG/JPEG file to a float image in [0, 1].

    Returns (H, W) when `gray` is set (luma projection of color input),
    otherwise (H, W, 3).
    """
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    if gray:
        return to_grayscale(arr)
    return arr


def save_image(img: np.ndarray, path) -> None:
    """Write a float image in [0, 1] (gray or RGB) as an 8-bit file."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = gray_to_rgb(img)
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path)
