"""Linear preference ranker for picking a color scale from a fixed grid.

A single linear scorer over image embeddings is trained on pairwise
labels (logistic loss on score differences, so the bias cancels and
scoring stays pointwise). At inference every grid scale is rendered
from the cached gray latent and color residual, scored, and the argmax
wins; ties go to the smaller scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from chromadiff.colorspace import scale_chroma, colorfulness, save_image, load_image

__all__ = [
    "RANKER_GRID",
    "PairLabel",
    "RankerModel",
    "RankerTrainingError",
    "score",
    "train_ranker",
    "rank_scales",
    "pair_accuracy",
    "synthetic_scale_pairs",
    "write_pair_file",
    "read_pair_file",
]

RANKER_GRID = (0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4)


class RankerTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PairLabel:
    """One labeled comparison; `preferred` names the winning side."""

    image_a: np.ndarray
    image_b: np.ndarray
    preferred: str

    def __post_init__(self):
        if self.preferred not in ("a", "b"):
            raise ValueError(f"preferred must be 'a' or 'b', got {self.preferred!r}")


@dataclass
class RankerModel:
    weights: np.ndarray
    bias: float
    embedder_id: str
    grid: tuple = RANKER_GRID
    embedder: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("ranker weights must be finite")
        grid = tuple(float(s) for s in self.grid)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"scale grid must be nonempty and strictly increasing: {grid}")
        self.grid = grid

    def save(self, path) -> None:
        payload = {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "embedder_id": self.embedder_id,
            "grid": list(self.grid),
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path, embedder=None) -> "RankerModel":
        payload = json.loads(Path(path).read_text())
        return cls(
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            embedder_id=payload["embedder_id"],
            grid=tuple(payload["grid"]),
            embedder=embedder,
        )


def score(img: np.ndarray, model: RankerModel) -> float:
    """Pointwise score: dot(weights, embed(img)) + bias."""
    if model.embedder is None:
        raise ValueError("model has no embedder attached")
    return float(model.weights @ model.embedder.embed_image(img) + model.bias)


def _logistic_objective(w, diffs, l2):
    margins = diffs @ w
    # log(1 + exp(-m)) via logaddexp for stability on easy pairs
    loss = np.logaddexp(0.0, -margins).mean() + l2 * (w @ w)
    sig = 1.0 / (1.0 + np.exp(np.clip(margins, -60, 60)))
    grad = -(diffs * sig[:, None]).mean(axis=0) + 2.0 * l2 * w
    return loss, grad


def train_ranker(
    pairs: list,
    embedder,
    *,
    grid: tuple = RANKER_GRID,
    l2: float = 1e-4,
    embedder_id: str | None = None,
) -> RankerModel:
    """Fit the linear scorer on preference pairs.

    Optimizes a logistic loss on score differences, so only the weight
    vector is learned; features are standardized internally and the
    affine transform is folded back into the returned weights, keeping
    scoring a plain dot product on raw embeddings.
    """
    if len(pairs) < 1:
        raise ValueError("need at least one pair")
    feats_a = np.stack([embedder.embed_image(p.image_a) for p in pairs])
    feats_b = np.stack([embedder.embed_image(p.image_b) for p in pairs])
    signs = np.array([1.0 if p.preferred == "a" else -1.0 for p in pairs])
    diffs = (feats_a - feats_b) * signs[:, None]

    spread = np.abs(diffs).max()
    if spread < 1e-12:
        raise RankerTrainingError(
            "degenerate embeddings: all pairs embed identically "
            f"(max |difference| = {spread:.3e} over {len(pairs)} pairs)"
        )

    all_feats = np.concatenate([feats_a, feats_b])
    mu = all_feats.mean(axis=0)
    sigma = all_feats.std(axis=0)
    sigma[sigma < 1e-12] = 1.0

    res = optimize.minimize(
        _logistic_objective,
        x0=np.zeros(diffs.shape[1]),
        args=(diffs / sigma, l2),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 500},
    )
    w = res.x / sigma
    if embedder_id is None:
        embedder_id = getattr(embedder, "embedder_id", type(embedder).__name__)
    return RankerModel(
        weights=w,
        bias=float(-(w @ mu)),
        embedder_id=embedder_id,
        grid=grid,
        embedder=embedder,
    )


def rank_scales(z_gray: np.ndarray, delta: np.ndarray, model: RankerModel, codec):
    """Render z_gray + s*delta for every grid scale and pick the argmax.

    Returns (best_scale, [(scale, score), ...]). np.argmax keeps the
    first maximum, and the grid is increasing, so ties resolve to the
    smaller scale.
    """
    scored = []
    for s in model.grid:
        img = codec.decode(z_gray + s * delta, clamp=True)
        scored.append((s, score(img, model)))
    values = np.array([v for _, v in scored])
    best = model.grid[int(np.argmax(values))]
    return best, scored


def pair_accuracy(model: RankerModel, pairs: list) -> float:
    """Fraction of pairs where the preferred side scores strictly higher."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    hits = 0
    for p in pairs:
        sa, sb = score(p.image_a, model), score(p.image_b, model)
        winner = sa if p.preferred == "a" else sb
        loser = sb if p.preferred == "a" else sa
        hits += winner > loser
    return hits / len(pairs)


def synthetic_scale_pairs(
    images: np.ndarray,
    *,
    target_colorfulness: float = 40.0,
    n_pairs: int = 500,
    seed: int = 0,
    scale_range: tuple = (0.0, 1.6),
    min_gap: float = 2.0,
):
    """Generate preference pairs from a known target: for two chroma
    scalings of the same image the one whose colorfulness lands closer
    to `target_colorfulness` wins. Near-ties (closeness gap below
    `min_gap`) are skipped so labels stay unambiguous.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs and attempts < n_pairs * 20:
        attempts += 1
        img = images[rng.integers(len(images))]
        s1, s2 = rng.uniform(*scale_range, size=2)
        a = scale_chroma(img, s1)
        b = scale_chroma(img, s2)
        da = abs(colorfulness(a) - target_colorfulness)
        db = abs(colorfulness(b) - target_colorfulness)
        if abs(da - db) < min_gap:
            continue
        pairs.append(PairLabel(a, b, "a" if da < db else "b"))
    if len(pairs) < n_pairs:
        raise RankerTrainingError(
            f"only generated {len(pairs)}/{n_pairs} unambiguous pairs; "
            "widen scale_range or lower min_gap"
        )
    return pairs


def write_pair_file(pairs: list, out_dir) -> Path:
    """Persist pairs as PNGs plus a labels.jsonl of {a, b, preferred}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, p in enumerate(pairs):
        name_a, name_b = f"pair_{i:05d}_a.png", f"pair_{i:05d}_b.png"
        save_image(p.image_a, out_dir / name_a)
        save_image(p.image_b, out_dir / name_b)
        lines.append(json.dumps({"a": name_a, "b": name_b, "preferred": p.preferred}))
    path = out_dir / "labels.jsonl"
    path.write_text("\n".join(lines) + "\n")
    return path


def read_pair_file(labels_path) -> list:
    labels_path = Path(labels_path)
    base = labels_path.parent
    pairs = []
    for line in labels_path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        pairs.append(
            PairLabel(load_image(base / rec["a"]), load_image(base / rec["b"]), rec["preferred"])
        )
    return pairs
