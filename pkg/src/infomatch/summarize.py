"""Extractive summarizers behind a single ``summarize`` entry point.

Every summarizer scores the sentences of one preprocessed document and keeps
the top ``k`` in document order. Statistics use ``Sentence.tokens`` (stemmed,
stopword-filtered); the emitted sentences keep their raw text.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DataError
from .preprocess import Sentence, TokenizedDocument

KINDS = (
    "none",
    "lexrank",
    "textrank_overlap",
    "textrank_bm25",
    "textrank_cosine",
    "reduction",
    "luhn",
    "lsa",
    "klsum",
)
GRAPH_KINDS = ("lexrank", "textrank_overlap", "textrank_bm25", "textrank_cosine", "reduction")

BM25_K1 = 1.2
BM25_B = 0.75
KL_EPSILON = 1e-9
LUHN_MAX_GAP = 4
# floor for ln|S_i| + ln|S_j| in the overlap kernel (the value for lengths 1 and 2)
OVERLAP_DENOM_FLOOR = math.log(2.0)
# scores closer than this are treated as tied so tie-breaks are stable under rounding
SCORE_DECIMALS = 12


@dataclass(frozen=True)
class SummarizerConfig:
    kind: str = "lexrank"
    k: int = 5
    damping: float = 0.85
    epsilon: float = 1e-6
    max_iter: int = 100
    lexrank_threshold: float = 0.1
    # stop KL-sum once no sentence lowers the divergence (may return fewer than k)
    klsum_early_stop: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown summarizer kind {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must be in (0, 1), got {self.damping}")
        if self.epsilon <= 0 or self.max_iter < 1:
            raise ValueError("epsilon must be > 0 and max_iter >= 1")

    @classmethod
    def from_dict(cls, data: dict | None) -> "SummarizerConfig":
        data = dict(data or {})
        names = set(cls.__dataclass_fields__)
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown summarizer keys: {sorted(unknown)}")
        return cls(**data)

    def with_kind(self, kind: str) -> "SummarizerConfig":
        return replace(self, kind=kind)


@dataclass(frozen=True)
class Summary:
    doc_id: str
    selected: tuple[int, ...]
    sentences: tuple[Sentence, ...]
    # per-step KL divergence for klsum, empty otherwise
    trace: tuple[float, ...] = field(default=(), compare=False)

    @property
    def tokens(self) -> list[str]:
        return [t for s in self.sentences for t in s.tokens]

    @property
    def surface(self) -> list[str]:
        return [t for s in self.sentences for t in s.surface]

    @property
    def text(self) -> str:
        return " ".join(s.raw_text for s in self.sentences)


@dataclass(frozen=True)
class SentenceGraph:
    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("graph weights must be a square matrix")
        if (w < 0).any():
            raise ValueError("graph weights must be non-negative")
        if not np.array_equal(w, w.T):
            raise ValueError("graph weights must be symmetric")
        if np.diag(w).any():
            raise ValueError("graph must have a zero diagonal")

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class PageRankResult:
    scores: np.ndarray
    iterations: int
    converged: bool


# --------------------------------------------------------------------------
# sentence statistics


def _token_lists(sentences) -> list[Sequence[str]]:
    out = []
    for s in sentences:
        out.append(s.tokens if isinstance(s, Sentence) else s)
    return out


def tfidf_vectors(sentences) -> list[dict[str, float]]:
    """tf-idf weights per sentence with tf = raw count and idf = ln(n / df)."""
    toks = _token_lists(sentences)
    if not any(toks):
        raise DataError("cannot build tf-idf vectors: every sentence is empty")
    n = len(toks)
    df: Counter[str] = Counter()
    for t in toks:
        df.update(set(t))
    idf = {term: math.log(n / d) for term, d in df.items()}
    return [{term: c * idf[term] for term, c in Counter(t).items()} for t in toks]


def _sparse_cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if len(a) > len(b):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    if dot == 0.0:
        return 0.0
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    return min(1.0, dot / (na * nb))


def _cosine_matrix(toks) -> np.ndarray:
    vecs = tfidf_vectors(toks)
    n = len(vecs)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = _sparse_cosine(vecs[i], vecs[j])
    return w


def _overlap_matrix(toks) -> np.ndarray:
    n = len(toks)
    sets = [set(t) for t in toks]
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            common = len(sets[i] & sets[j])
            if not common:
                continue
            denom = max(math.log(len(toks[i])) + math.log(len(toks[j])), OVERLAP_DENOM_FLOOR)
            w[i, j] = w[j, i] = common / denom
    return w


def _bm25_matrix(toks) -> np.ndarray:
    """Symmetrized BM25: mean of score(query=S_i, doc=S_j) and score(S_j, S_i).

    idf uses ln(1 + (N - df + 0.5) / (df + 0.5)), which stays positive.
    """
    n = len(toks)
    df: Counter[str] = Counter()
    for t in toks:
        df.update(set(t))
    idf = {term: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for term, d in df.items()}
    lengths = [len(t) for t in toks]
    avgdl = sum(lengths) / n if n else 0.0
    counts = [Counter(t) for t in toks]

    raw = np.zeros((n, n))
    for j in range(n):
        if not lengths[j]:
            continue
        norm = BM25_K1 * (1.0 - BM25_B + BM25_B * lengths[j] / avgdl)
        for i in range(n):
            if i == j:
                continue
            score = 0.0
            for term in counts[i]:
                f = counts[j].get(term)
                if f:
                    score += idf[term] * f * (BM25_K1 + 1.0) / (f + norm)
            raw[i, j] = score
    return (raw + raw.T) / 2.0


def build_graph(sentences, kind: str, lexrank_threshold: float = 0.1) -> SentenceGraph:
    toks = _token_lists(sentences)
    if kind in ("lexrank", "textrank_cosine", "reduction"):
        w = _cosine_matrix(toks)
        if kind == "lexrank":
            w[w < lexrank_threshold] = 0.0
    elif kind == "textrank_overlap":
        w = _overlap_matrix(toks)
    elif kind == "textrank_bm25":
        w = _bm25_matrix(toks)
    else:
        raise ValueError(f"{kind!r} is not a graph summarizer")
    return SentenceGraph(w)


def pagerank(graph: SentenceGraph | np.ndarray, damping: float = 0.85, epsilon: float = 1e-6, max_iter: int = 100) -> PageRankResult:
    """Weighted PageRank by power iteration.

    s <- (1 - d)/n + d * P^T s, where P is the row-normalized weight matrix
    and rows without out-weight spread their mass uniformly. Stops when the
    L1 change drops below ``epsilon``.
    """
    w = graph.weights if isinstance(graph, SentenceGraph) else np.asarray(graph, dtype=float)
    n = w.shape[0]
    if n == 0:
        return PageRankResult(np.zeros(0), 0, True)
    out = w.sum(axis=1)
    dangling = out == 0
    trans = np.divide(w, out[:, None], out=np.zeros_like(w), where=~dangling[:, None])
    scores = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        spread = scores[dangling].sum() / n
        new = (1.0 - damping) / n + damping * (trans.T @ scores + spread)
        new /= new.sum()
        delta = np.abs(new - scores).sum()
        scores = new
        if delta < epsilon:
            converged = True
            break
    return PageRankResult(scores, it, converged)


# --------------------------------------------------------------------------
# ranking helpers


def _top_k(scores: Sequence[float], k: int) -> list[int]:
    """Indices of the k best scores; ties go to the lower index."""
    q = np.round(np.asarray(scores, dtype=float), SCORE_DECIMALS)
    order = sorted(range(len(q)), key=lambda i: (-q[i], i))
    return sorted(order[:k])


def luhn_threshold(n_sentences: int) -> int:
    """Minimum frequency for a significant word: max(2, ceil(0.1 * n + 4))."""
    return max(2, math.ceil(0.1 * n_sentences + 4))


def luhn_scores(toks: Sequence[Sequence[str]], max_gap: int = LUHN_MAX_GAP) -> list[float]:
    """Luhn cluster scores.

    Significant words are stems occurring at least ``luhn_threshold`` times.
    Within a sentence, significant words separated by more than ``max_gap``
    insignificant words start a new cluster; a cluster scores
    (significant count)^2 / span, and a sentence takes its best cluster.
    """
    freq = Counter(t for s in toks for t in s)
    cutoff = luhn_threshold(len(toks))
    significant = {w for w, c in freq.items() if c >= cutoff}
    scores = []
    for s in toks:
        positions = [i for i, t in enumerate(s) if t in significant]
        best = 0.0
        if positions:
            start = prev = positions[0]
            count = 1
            for p in positions[1:]:
                if p - prev - 1 > max_gap:
                    best = max(best, count * count / (prev - start + 1))
                    start, count = p, 0
                count += 1
                prev = p
            best = max(best, count * count / (prev - start + 1))
        scores.append(best)
    return scores


def term_sentence_matrix(toks: Sequence[Sequence[str]]) -> tuple[np.ndarray, list[str]]:
    vocab = sorted({t for s in toks for t in s})
    index = {t: i for i, t in enumerate(vocab)}
    x = np.zeros((len(vocab), len(toks)))
    for j, s in enumerate(toks):
        for t in s:
            x[index[t], j] += 1.0
    return x, vocab


def lsa_decompose(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD x = U diag(sigma) V^T."""
    u, sigma, vt = np.linalg.svd(x, full_matrices=False)
    return u, sigma, vt.T


def lsa_scores(toks: Sequence[Sequence[str]], k: int) -> list[float]:
    """Length of each sentence's sigma-weighted vector over the top min(k, rank) topics."""
    x, _ = term_sentence_matrix(toks)
    if x.size == 0:
        return [0.0] * len(toks)
    _, sigma, v = lsa_decompose(x)
    tol = sigma.max(initial=0.0) * max(x.shape) * np.finfo(float).eps
    rank = int((sigma > tol).sum())
    r = min(k, rank)
    weighted = v[:, :r] * sigma[:r]
    return list(np.sqrt((weighted**2).sum(axis=1)))


def kl_divergence(p: Sequence[float], q: Sequence[float], tol: float = 1e-9) -> float:
    """sum_i p_i ln(p_i / q_i); zero-probability terms of p contribute nothing."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("p and q must be 1-d and of equal length")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > tol or abs(q.sum() - 1.0) > tol:
        raise ValueError("p and q must each sum to 1")
    mask = p > 0
    if (q[mask] == 0).any():
        return math.inf
    return max(0.0, float(np.sum(p[mask] * np.log(p[mask] / q[mask]))))


def smoothed_distribution(counts: np.ndarray, eps: float = KL_EPSILON) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    return (counts + eps) / (counts.sum() + eps * counts.size)


def klsum_select(toks: Sequence[Sequence[str]], k: int, early_stop: bool = False) -> tuple[list[int], list[float]]:
    """Greedy KL-sum: repeatedly add the sentence that minimizes KL(P || Q).

    P is the smoothed unigram distribution of the document and Q that of the
    summary so far plus the candidate. Returns the picks in selection order
    and the divergence after each pick.
    """
    vocab = sorted({t for s in toks for t in s})
    index = {t: i for i, t in enumerate(vocab)}
    sent_counts = np.zeros((len(toks), len(vocab)))
    for j, s in enumerate(toks):
        for t in s:
            sent_counts[j, index[t]] += 1.0
    p = smoothed_distribution(sent_counts.sum(axis=0))

    chosen: list[int] = []
    trace: list[float] = []
    current = np.zeros(len(vocab))
    best_so_far = math.inf
    while len(chosen) < min(k, len(toks)):
        candidates = []
        for j in range(len(toks)):
            if j in chosen:
                continue
            value = kl_divergence(p, smoothed_distribution(current + sent_counts[j]))
            candidates.append((round(value, SCORE_DECIMALS), j, value))
        _, pick, value = min(candidates)
        if early_stop and value >= best_so_far:
            break
        chosen.append(pick)
        trace.append(value)
        best_so_far = value
        current = current + sent_counts[pick]
    return chosen, trace


# --------------------------------------------------------------------------
# dispatch


def summarize(doc: TokenizedDocument, config: SummarizerConfig | None = None) -> Summary:
    config = config or SummarizerConfig()
    sentences = doc.sentences
    n = len(sentences)
    if n == 0:
        raise DataError(f"document {doc.doc_id!r} has no sentences")
    k = config.k
    toks = [s.tokens for s in sentences]
    trace: tuple[float, ...] = ()

    if config.kind == "none" or (k >= n and config.kind != "klsum"):
        selected = list(range(n))
    elif config.kind in ("lexrank", "textrank_overlap", "textrank_bm25", "textrank_cosine"):
        graph = build_graph(toks, config.kind, config.lexrank_threshold)
        pr = pagerank(graph, config.damping, config.epsilon, config.max_iter)
        selected = _top_k(pr.scores, k)
    elif config.kind == "reduction":
        graph = build_graph(toks, "reduction")
        selected = _top_k(graph.weights.sum(axis=1), k)
    elif config.kind == "luhn":
        selected = _top_k(luhn_scores(toks), k)
    elif config.kind == "lsa":
        selected = _top_k(lsa_scores(toks, k), k)
    else:
        picks, steps = klsum_select(toks, k, config.klsum_early_stop)
        selected, trace = sorted(picks), tuple(steps)

    return Summary(doc.doc_id, tuple(selected), tuple(sentences[i] for i in selected), trace)
