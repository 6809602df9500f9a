"""Shared fixtures: toy corpus plus trained desk-scale models.

Training fixtures are session-scoped and cached on disk under
tests/.cache keyed by their full config, so the first run pays the
training cost and later runs load checkpoints. Delete the cache dir to
force retraining.
"""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from chromadiff import toydata
from chromadiff.codec import ConvCodec, IdentityCodec, corpus_hash, train_conv_codec

CACHE = Path(__file__).parent / ".cache"

CORPUS_N = 2048
CORPUS_SIZE = 32
CORPUS_SEED = 0
HOLDOUT = 64  # tail of the corpus, never touched by training fixtures

CODEC_CFG = {"width": 32, "epochs": 16, "seed": 0, "channels": 4}
# lr raised from the 1e-5 default for the tiny corpus; 2e-3 converges so
# fast the step-100 window already sits near the floor, so 3e-4 it is
DENOISER_CFG = {
    "learning_rate": 3e-4,
    "batch_size": 32,
    "total_steps": 3500,
    "seed": 0,
    "base_width": 24,
    "text_dim": 48,
}
TOWER_CFG = {"dim": 32, "epochs": 8, "seed": 0}


def _key(cfg: dict, *extra: str) -> str:
    blob = json.dumps(cfg, sort_keys=True) + "|".join(extra)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@pytest.fixture(scope="session")
def corpus():
    return toydata.make_corpus(n=CORPUS_N, size=CORPUS_SIZE, seed=CORPUS_SEED)


@pytest.fixture(scope="session")
def train_split(corpus):
    images, captions = corpus
    return images[:-HOLDOUT], captions[:-HOLDOUT]


@pytest.fixture(scope="session")
def holdout_split(corpus):
    images, captions = corpus
    return images[-HOLDOUT:], captions[-HOLDOUT:]


@pytest.fixture(scope="session")
def identity_codec():
    return IdentityCodec()


@pytest.fixture(scope="session")
def conv_codec(train_split):
    images, _ = train_split
    key = _key(CODEC_CFG, corpus_hash(images))
    CACHE.mkdir(exist_ok=True)
    path = CACHE / f"codec-{key}.pt"
    if path.exists():
        return ConvCodec.load(path)
    codec, _ = train_conv_codec(images, **CODEC_CFG)
    codec.save(path)
    return codec


@pytest.fixture(scope="session")
def trained_denoiser(train_split, identity_codec):
    """Denoiser trained on the identity backend, with its loss history."""
    from chromadiff.denoiser import load_denoiser, save_denoiser
    from chromadiff.diffusion import TrainConfig, train_denoiser

    images, captions = train_split
    key = _key(DENOISER_CFG, corpus_hash(images), "identity")
    CACHE.mkdir(exist_ok=True)
    weights = CACHE / f"denoiser-{key}.pt"
    history_path = CACHE / f"denoiser-{key}-history.json"
    if weights.exists() and history_path.exists():
        return load_denoiser(weights), json.loads(history_path.read_text())

    cfg = TrainConfig(
        learning_rate=DENOISER_CFG["learning_rate"],
        batch_size=DENOISER_CFG["batch_size"],
        total_steps=DENOISER_CFG["total_steps"],
    )
    model, history = train_denoiser(
        images, captions, identity_codec, cfg,
        seed=DENOISER_CFG["seed"],
        base_width=DENOISER_CFG["base_width"],
        text_dim=DENOISER_CFG["text_dim"],
    )
    save_denoiser(model, weights)
    history_path.write_text(json.dumps(history))
    return model, history


@pytest.fixture(scope="session")
def dual_tower(train_split):
    from chromadiff.embedders import DualTowerEmbedder, train_dual_tower

    images, captions = train_split
    key = _key(TOWER_CFG, corpus_hash(images))
    CACHE.mkdir(exist_ok=True)
    path = CACHE / f"tower-{key}.pt"
    if path.exists():
        return DualTowerEmbedder.load(path)
    embedder, _ = train_dual_tower(images, captions, **TOWER_CFG)
    embedder.save(path)
    return embedder


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
