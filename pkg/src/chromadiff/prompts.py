"""Prompt strategies for the prompt-free colorization pipeline.

Four strategies for turning a grayscale-image caption into conditioning
text: stripping grayscale hint phrases, steering by an embedding-space
color direction, rephrasing through an external language model (interface
only, with a local fallback), and the default of ignoring content
entirely: a null positive prompt paired with a fixed anti-grayscale
negative prompt.
"""

from __future__ import annotations

import dataclasses
import re
from importlib import resources

import numpy as np

__all__ = [
    "NEGATIVE_PROMPT",
    "REPHRASE_TEMPLATE",
    "PromptBundle",
    "EmbeddingDirection",
    "default_bundle",
    "load_phrases",
    "strip_grayscale_hints",
    "compute_color_direction",
    "rephrase_external",
    "RephraseResult",
]

# the fixed anti-grayscale negative prompt; measured best among manually
# evaluated candidates drawn from common grayscale-caption phrases
NEGATIVE_PROMPT = (
    "grainy black-and-white photo, photo taken on an old box camera, "
    "grayscale photography"
)

# instruction template for the external rephrasing client; {caption} is
# substituted before the call
REPHRASE_TEMPLATE = (
    "You are a highly intelligent agent. Given an image caption of a "
    "grayscale image, rephrase it as a colorized RGB photo. Remove any "
    "keywords relevant to grayscale images (e.g., black and white). "
    "Maintain a similar style to the input caption. "
    "Input Caption: {caption}. Output Caption:"
)


@dataclasses.dataclass(frozen=True)
class PromptBundle:
    positive: str
    negative: str
    strategy: str


@dataclasses.dataclass
class EmbeddingDirection:
    vector: np.ndarray
    corpus_size: int


def default_bundle() -> PromptBundle:
    """Null positive text plus the fixed negative prompt."""
    return PromptBundle(positive="", negative=NEGATIVE_PROMPT, strategy="null+negative")


def load_phrases(path=None) -> list[str]:
    """Grayscale hint phrases, one per line; ships with a default list."""
    if path is None:
        text = (resources.files("chromadiff") / "data/grayscale_phrases.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    phrases = [line.strip() for line in text.splitlines() if line.strip()]
    if not phrases:
        raise ValueError("phrase list is empty")
    return phrases


def strip_grayscale_hints(caption: str, phrases: list[str] | None = None) -> str:
    """Remove grayscale hint phrases, case-insensitively; normalize spaces.

    Idempotent: stripping a stripped caption changes nothing. A caption
    consisting only of hint phrases collapses to the empty string (the
    null prompt).
    """
    if phrases is None:
        phrases = load_phrases()
    out = caption
    for phrase in sorted(phrases, key=len, reverse=True):
        pattern = re.compile(r"(?<![\w&])" + re.escape(phrase) + r"(?![\w&])",
                             re.IGNORECASE)
        out = pattern.sub(" ", out)
    return re.sub(r"\s+", " ", out).strip()


def compute_color_direction(gray_captions: list[str], color_captions: list[str],
                            embedder) -> EmbeddingDirection:
    """Mean embedding offset from gray-style to color-style captions.

    `embedder` must expose embed_text(str) -> 1-D vector. Adding the
    returned vector to a gray caption's embedding moves it toward its
    color counterpart.
    """
    if len(gray_captions) != len(color_captions):
        raise ValueError("caption lists must pair up")
    if not gray_captions:
        raise ValueError("need at least one caption pair")
    diffs = [
        np.asarray(embedder.embed_text(c), dtype=np.float64)
        - np.asarray(embedder.embed_text(g), dtype=np.float64)
        for g, c in zip(gray_captions, color_captions)
    ]
    return EmbeddingDirection(vector=np.mean(diffs, axis=0), corpus_size=len(diffs))


@dataclasses.dataclass
class RephraseResult:
    text: str
    fallback_used: bool


def rephrase_external(caption: str, client, phrases: list[str] | None = None) -> RephraseResult:
    """Rephrase a caption through an external text client.

    `client` is a callable taking the filled-in instruction prompt and
    returning the rephrased caption. Any exception or empty response
    falls back to local hint stripping, flagged in the result. An empty
    caption short-circuits to itself.
    """
    if not caption:
        return RephraseResult(text="", fallback_used=False)
    try:
        out = client(REPHRASE_TEMPLATE.format(caption=caption))
        if out is None or not str(out).strip():
            raise ValueError("empty response")
        return RephraseResult(text=str(out).strip(), fallback_used=False)
    except Exception:
        return RephraseResult(
            text=strip_grayscale_hints(caption, phrases), fallback_used=True
        )
