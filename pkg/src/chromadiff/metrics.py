"""Evaluation metrics: Frechet distance, Elo ratings, PSNR/SSIM, Spearman.

The Frechet distance operates on feature arrays of shape (N, D); callers
supply the features (see `embedders` for the toy image embedder). Elo
ratings follow the standard logistic expected-outcome update with a fixed
learning rate.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import ndimage, stats

from chromadiff.colorspace import colorfulness, gray_to_rgb, to_grayscale

__all__ = [
    "frechet_distance",
    "gaussian_stats",
    "elo_expected",
    "elo_update",
    "EloResult",
    "run_elo",
    "psnr",
    "ssim",
    "spearman",
    "mean_colorfulness",
    "colorfulness_delta",
    "delta_colorfulness",
    "embedding_similarity",
]


# --- Frechet distance --------------------------------------------------------


def gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of an (N, D) feature array.

    Covariance uses the unbiased (N-1) normalization. N must be >= 2.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError(f"need an (N>=2, D) feature array, got shape {features.shape}")
    mu = features.mean(axis=0)
    sigma = np.cov(features, rowvar=False).reshape(features.shape[1], features.shape[1])
    return mu, sigma


def _sqrtm_product(sigma_a: np.ndarray, sigma_b: np.ndarray) -> float:
    # tr((Sa Sb)^{1/2}) via the eigenvalues of the (non-symmetric) product;
    # clamp small negative eigenvalues from roundoff before the sqrt
    prod = sigma_a @ sigma_b
    eigvals = np.linalg.eigvals(prod)
    eigvals = np.real(eigvals)
    eigvals = np.clip(eigvals, 0.0, None)
    return float(np.sum(np.sqrt(eigvals)))


def frechet_distance(
    features_a: np.ndarray, features_b: np.ndarray
) -> float:
    """Frechet distance between Gaussian fits of two feature sets.

        d^2 = ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2})

    Both inputs are (N, D) arrays with N >= 2; feature dimensions must
    match. Symmetric in its arguments and zero when the sets coincide.
    """
    mu_a, sigma_a = gaussian_stats(features_a)
    mu_b, sigma_b = gaussian_stats(features_b)
    if mu_a.shape != mu_b.shape:
        raise ValueError("feature dimensions differ")
    diff = mu_a - mu_b
    d2 = float(diff @ diff + np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * _sqrtm_product(
        sigma_a, sigma_b
    )
    # roundoff can leave a tiny negative residue for identical sets
    return max(d2, 0.0)


def frechet_from_stats(
    mu_a: np.ndarray, sigma_a: np.ndarray, mu_b: np.ndarray, sigma_b: np.ndarray
) -> float:
    """Frechet distance from precomputed Gaussian statistics."""
    diff = np.asarray(mu_a, dtype=np.float64) - np.asarray(mu_b, dtype=np.float64)
    d2 = float(diff @ diff + np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * _sqrtm_product(
        np.asarray(sigma_a, dtype=np.float64), np.asarray(sigma_b, dtype=np.float64)
    )
    return max(d2, 0.0)


# --- Elo ---------------------------------------------------------------------

ELO_INIT = 1500.0
ELO_LR = 0.1


def elo_expected(rating_a: float, rating_b: float) -> float:
    """Expected outcome for player A: 1 / (1 + 10^((Rb - Ra)/400)).

    0.5 for equal ratings; approaches 1 as Ra grows past Rb.
    """
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


def elo_update(
    rating_a: float, rating_b: float, outcome: float, lr: float = ELO_LR
) -> tuple[float, float]:
    """One pairwise update. `outcome` is 1 if A won, 0 if B won.

    Returns the new (rating_a, rating_b). Zero-sum: the two deltas cancel
    exactly.
    """
    if not 0.0 <= outcome <= 1.0:
        raise ValueError(f"outcome must lie in [0, 1], got {outcome}")
    expected = elo_expected(rating_a, rating_b)
    delta = lr * (outcome - expected)
    return rating_a + delta, rating_b - delta


@dataclasses.dataclass
class EloResult:
    ratings: dict[str, float]
    epochs: int
    converged: bool


def run_elo(
    matches: list[tuple[str, str, float]],
    lr: float = ELO_LR,
    init: float = ELO_INIT,
    tol: float = 1e-6,
    max_epochs: int = 500,
    seed: int = 0,
    zero_means_first_wins: bool = False,
) -> EloResult:
    """Run Elo to convergence over a fixed set of pairwise matches.

    Matches are (player_a, player_b, outcome) with outcome 1 meaning A won
    (set `zero_means_first_wins` for datasets encoded the other way round,
    where 0 marks a first-player win). Each epoch replays every match once
    in a freshly shuffled order, with every expected outcome evaluated
    against the ratings as they stood at the start of the epoch and the
    accumulated deltas applied at its end. Batching per epoch is what makes
    the stopping rule well defined: updating in place after every match
    keeps each step at ~lr/2 forever (a limit cycle around the fixed point),
    so the per-epoch change would never fall below a small tolerance, and a
    perfectly symmetric match set would random-walk away from the initial
    rating instead of staying put. With batched epochs a symmetric set is
    an exact fixed point. Iteration stops when the largest rating change
    over an epoch drops below `tol`, or after `max_epochs` (one-sided match
    sets have no finite fixed point, so the cap is load-bearing).
    """
    players = sorted({p for m in matches for p in m[:2]})
    ratings = {p: float(init) for p in players}
    rng = np.random.default_rng(seed)
    epochs = 0
    converged = False
    for _ in range(max_epochs):
        epochs += 1
        order = rng.permutation(len(matches))
        deltas = {p: 0.0 for p in players}
        for i in order:
            a, b, outcome = matches[i]
            outcome = float(outcome)
            if zero_means_first_wins:
                outcome = 1.0 - outcome
            expected = elo_expected(ratings[a], ratings[b])
            step = lr * (outcome - expected)
            deltas[a] += step
            deltas[b] -= step
        max_change = max(abs(d) for d in deltas.values())
        for p in players:
            ratings[p] += deltas[p]
        if max_change < tol:
            converged = True
            break
    return EloResult(ratings=ratings, epochs=epochs, converged=converged)


# --- PSNR / SSIM -------------------------------------------------------------


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB. Identical inputs return +inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(data_range**2 / mse))


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    data_range: float = 1.0,
    k1: float = 0.01,
    k2: float = 0.03,
) -> float:
    """Mean structural similarity over an 11x11 Gaussian window (sigma 1.5).

    Grayscale inputs only, shape (H, W) with H, W >= 11. The map is
    evaluated in 'valid' mode (no padding) and averaged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < 11:
        raise ValueError("ssim needs a 2-D image at least 11x11")
    kernel = _gaussian_kernel()
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def filt(x):
        full = ndimage.convolve(x, kernel, mode="constant")
        return full[5:-5, 5:-5]

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


# --- rank statistics ---------------------------------------------------------


def spearman(x, y) -> float:
    """Spearman rank correlation; exactly 1.0 for identical rankings."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length 1-D arrays of length >= 2")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    if np.array_equal(rx, ry):
        return 1.0
    return float(stats.spearmanr(x, y).statistic)


# --- batch colorfulness helpers ----------------------------------------------


def mean_colorfulness(images) -> float:
    """Mean colorfulness over an iterable of RGB images."""
    vals = [colorfulness(img) for img in images]
    if not vals:
        raise ValueError("no images")
    return float(np.mean(vals))


def colorfulness_delta(outputs, references) -> float:
    """Mean |CLR(output) - CLR(reference)| over paired image lists."""
    outputs = list(outputs)
    references = list(references)
    if len(outputs) != len(references) or not outputs:
        raise ValueError("need two equal-length non-empty image lists")
    return float(
        np.mean([abs(colorfulness(o) - colorfulness(r)) for o, r in zip(outputs, references)])
    )


def delta_colorfulness(set_a, set_b) -> float:
    """|mean CLR(set_a) - mean CLR(set_b)|.

    Set-level version: compares the distributions' colorfulness means, so
    the two sets need not pair up or even have the same size. Use
    colorfulness_delta for the per-image paired comparison.
    """
    return abs(mean_colorfulness(set_a) - mean_colorfulness(set_b))


def embedding_similarity(image, caption: str, embedder) -> float:
    """Cosine similarity between an image and a caption under `embedder`.

    Works with anything exposing embed_image/embed_text. Zero vectors
    (e.g. an empty caption) score 0 rather than dividing by zero.
    """
    a = np.asarray(embedder.embed_image(image), dtype=np.float64).ravel()
    b = np.asarray(embedder.embed_text(caption), dtype=np.float64).ravel()
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def grayscale_baseline_delta(references) -> float:
    """Mean |CLR(gray(ref)) - CLR(ref)|: the do-nothing colorization baseline."""
    references = list(references)
    return colorfulness_delta(
        [gray_to_rgb(to_grayscale(r)) for r in references], references
    )
