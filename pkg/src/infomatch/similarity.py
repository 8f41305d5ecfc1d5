"""Pair similarity: cosine of SIF embeddings or negated Word Mover Distance."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embed import DEFAULT_SIF_A, FrequencyTable, WordVectorStore, embed_document, sif_weight
from .errors import DataError, EmptyEmbedding, SupportTooLarge
from .transport import solve_transport

METRICS = ("cosine", "neg_wmd")
DEFAULT_SUPPORT_CAP = 256


@dataclass(frozen=True)
class NBowDistribution:
    words: tuple[str, ...]
    vectors: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError("support words must be unique")
        if self.vectors.shape[0] != len(self.words) or self.mass.shape != (len(self.words),):
            raise ValueError("words, vectors and mass must align")
        if (self.mass < 0).any() or abs(self.mass.sum() - 1.0) > 1e-9:
            raise ValueError("mass must be non-negative and sum to 1")

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    metric: str


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"vectors differ in shape: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DataError("cosine similarity is undefined for a zero vector")
    return float(min(1.0, max(-1.0, float(u @ v) / (nu * nv))))


def nbow(tokens: Sequence[str], store: WordVectorStore, freq: FrequencyTable | None = None, sif_a: float | None = None) -> NBowDistribution:
    """Normalized bag of words over the in-vocabulary tokens.

    Tokens are grouped by the store key they resolve to. With ``freq`` and
    ``sif_a`` given, each word's count is scaled by its SIF weight before
    normalizing.
    """
    counts: Counter[str] = Counter()
    for tok in tokens:
        key = store.resolve(tok)
        if key is not None:
            counts[key] += 1
    if not counts:
        raise EmptyEmbedding("no in-vocabulary tokens to build a bag of words from")
    words = tuple(sorted(counts))
    weights = np.array([float(counts[w]) for w in words])
    if freq is not None and sif_a is not None:
        weights *= np.array([sif_weight(w, freq, sif_a) for w in words])
    mass = weights / weights.sum()
    vectors = np.vstack([store[w] for w in words])
    return NBowDistribution(words, vectors, mass)


def ground_costs(p: NBowDistribution, q: NBowDistribution) -> np.ndarray:
    diff = p.vectors[:, None, :] - q.vectors[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def wmd(p: NBowDistribution, q: NBowDistribution, support_cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """Word Mover Distance: the exact optimal transport cost between two nBOWs.

    The pair is put in a canonical order first so that wmd(p, q) and
    wmd(q, p) are computed identically.
    """
    for d in (p, q):
        if len(d) > support_cap:
            raise SupportTooLarge(
                f"bag of words has {len(d)} distinct words, above the cap of {support_cap}; "
                "summarize more aggressively or raise wmd.support_cap"
            )
    if (q.words, tuple(q.mass)) < (p.words, tuple(p.mass)):
        p, q = q, p
    if p.words == q.words and np.array_equal(p.mass, q.mass):
        return 0.0
    result = solve_transport(p.mass, q.mass, ground_costs(p, q))
    return max(0.0, result.cost)


@dataclass(frozen=True)
class ScoringOptions:
    metric: str = "neg_wmd"
    sif_a: float = DEFAULT_SIF_A
    support_cap: int = DEFAULT_SUPPORT_CAP
    # weight nBOW masses by SIF as well as frequency
    sif_mass: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")


def score_pair(news, guideline, store: WordVectorStore, freq: FrequencyTable, options: ScoringOptions | None = None) -> SimilarityScore:
    """Similarity of two summaries; larger always means more alike."""
    options = options or ScoringOptions()
    if options.metric == "cosine":
        u = embed_document(news, store, freq, options.sif_a).vector
        v = embed_document(guideline, store, freq, options.sif_a).vector
        return SimilarityScore(cosine_similarity(u, v), "cosine")
    sif_a = options.sif_a if options.sif_mass else None
    p = nbow(news.surface, store, freq, sif_a)
    q = nbow(guideline.surface, store, freq, sif_a)
    distance = wmd(p, q, options.support_cap)
    value = -distance if distance else 0.0
    if not math.isfinite(value):
        raise DataError("non-finite Word Mover Distance")
    return SimilarityScore(value, "neg_wmd")
