"""Deterministic feature-hash text embeddings.

The default provider needs no model weights and no network: tokens and
adjacent-token bigrams are hashed into a fixed number of buckets with a
stable 64-bit hash, signed by the hash's bit parity, then L2-normalized.
Any remote embedding provider can replace it behind ``embed``'s contract
(unit-norm vector, zero vector for empty text).
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .errors import DimensionMismatchError

DEFAULT_DIM = 256

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _hash64(token: str) -> int:
    # process-stable, unlike builtin hash()
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class HashingEmbedder:
    """Feature-hashing embedder over unigrams and adjacent bigrams."""

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        """Embed one text; unit L2 norm, or the zero vector for no tokens."""
        tokens = _tokenize(text)
        vec = np.zeros(self.dim, dtype=np.float64)
        if not tokens:
            return vec
        features = list(tokens)
        features.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        for feature in features:
            h = _hash64(feature)
            bucket = h % self.dim
            sign = 1.0 if bin(h).count("1") % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # possible when signed features cancel exactly
            return np.zeros(self.dim, dtype=np.float64)
        return vec / norm

    def embed_many(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts]) if texts else np.zeros((0, self.dim))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of pre-normalized vectors; anything against zero is 0."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vector dimensions differ: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))
