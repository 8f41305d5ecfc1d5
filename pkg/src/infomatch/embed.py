"""Pretrained word vectors and SIF-weighted document embeddings."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, EmptyEmbedding, ParseError

logger = logging.getLogger(__name__)

FORMATS = ("text", "word2vec_binary")
DEFAULT_SIF_A = 1e-3


class WordVectorStore:
    """Read-only map from word to a dense vector of fixed dimension.

    Lookups try the word as given, then its lowercase form, so stores keyed
    by cased words still answer lowercase queries.
    """

    def __init__(self, words: Sequence[str], vectors, name: str = ""):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise DataError("vectors must be a (len(words), D) matrix")
        if vectors.shape[1] < 1:
            raise DataError("vector dimension must be positive")
        self.name = name
        self.words = list(words)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self._index = {}
        for i, w in enumerate(self.words):
            if w in self._index:
                raise DataError(f"duplicate word {w!r} in vector store")
            self._index[w] = i

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return self.resolve(word) is not None

    def resolve(self, word: str) -> str | None:
        """The stored key that ``word`` maps to, or None when out of vocabulary."""
        if word in self._index:
            return word
        low = word.lower()
        if low in self._index:
            return low
        return None

    def get(self, word: str) -> np.ndarray | None:
        key = self.resolve(word)
        return None if key is None else self.vectors[self._index[key]]

    def __getitem__(self, word: str) -> np.ndarray:
        vec = self.get(word)
        if vec is None:
            raise KeyError(word)
        return vec

    def __repr__(self) -> str:
        return f"WordVectorStore(name={self.name!r}, size={len(self)}, dimension={self.dimension})"


def _add_entry(words, rows, seen, word, vec, path, where):
    if word in seen:
        logger.warning("%s: duplicate word %r at %s ignored (first occurrence kept)", path, word, where)
        return
    seen.add(word)
    words.append(word)
    rows.append(vec)


def _load_text(path: Path) -> tuple[list[str], np.ndarray]:
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            # optional word2vec-style "count dim" header
            if lineno == 1 and len(parts) == 2 and parts[0].isdigit() and parts[1].isdigit():
                dim = int(parts[1])
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ParseError(f"word {word!r} has no vector components", path, lineno)
            if len(values) != dim:
                raise ParseError(f"word {word!r} has {len(values)} components, expected {dim}", path, lineno)
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise ParseError(f"word {word!r} has a non-numeric component", path, lineno) from None
            _add_entry(words, rows, seen, word, vec, path, f"line {lineno}")
    if not words:
        raise ParseError("no vectors found", path)
    return words, np.vstack(rows)


def _load_binary(path: Path) -> tuple[list[str], np.ndarray]:
    data = path.read_bytes()
    if not data:
        raise ParseError("empty file", path)
    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError("missing header line", path, 1)
    try:
        count, dim = (int(x) for x in data[:nl].split())
    except ValueError:
        raise ParseError("header must be '<vocab_size> <dimension>'", path, 1) from None
    if dim < 1:
        raise ParseError(f"invalid dimension {dim}", path, 1)
    rec_bytes = 4 * dim
    pos = nl + 1
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    for n in range(count):
        while pos < len(data) and data[pos : pos + 1] in (b"\n", b" "):
            pos += 1
        space = data.find(b" ", pos)
        if space < 0:
            raise ParseError(f"truncated record {n} at byte offset {pos}", path)
        word = data[pos:space].decode("utf-8", errors="replace")
        start = space + 1
        if start + rec_bytes > len(data):
            raise ParseError(f"word {word!r} (record {n}, offset {pos}) has fewer than {dim} floats", path)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=start).astype(np.float64)
        _add_entry(words, rows, seen, word, vec, path, f"byte offset {pos}")
        pos = start + rec_bytes
    if not words:
        raise ParseError("no vectors found", path)
    return words, np.vstack(rows)


def load_vectors(path, format: str = "text", name: str | None = None) -> WordVectorStore:
    """Load a text (``word v1 ... vD`` per line) or word2vec binary vector file."""
    path = Path(path)
    if format not in FORMATS:
        raise DataError(f"unknown vector format {format!r}; expected one of {FORMATS}")
    if not path.exists():
        raise DataError(f"vector file not found: {path}")
    if path.stat().st_size == 0:
        raise ParseError("empty file", path)
    words, matrix = _load_text(path) if format == "text" else _load_binary(path)
    return WordVectorStore(words, matrix, name=name or path.stem)


def save_vectors(store: WordVectorStore, path, format: str = "text") -> None:
    path = Path(path)
    if format == "text":
        with path.open("w", encoding="utf-8") as fh:
            for word, vec in zip(store.words, store.vectors):
                fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")
    elif format == "word2vec_binary":
        with path.open("wb") as fh:
            fh.write(f"{len(store)} {store.dimension}\n".encode())
            for word, vec in zip(store.words, store.vectors):
                fh.write(word.encode("utf-8") + b" ")
                fh.write(np.asarray(vec, dtype="<f4").tobytes())
                fh.write(b"\n")
    else:
        raise DataError(f"unknown vector format {format!r}")


# --------------------------------------------------------------------------
# word probabilities and SIF


@dataclass(frozen=True)
class FrequencyTable:
    counts: Mapping[str, int]
    total_tokens: int

    def p(self, word: str) -> float:
        """Relative frequency; unseen words get 1 / total_tokens."""
        c = self.counts.get(word.lower(), 0)
        return (c if c else 1) / self.total_tokens

    def probabilities(self) -> dict[str, float]:
        return {w: c / self.total_tokens for w, c in self.counts.items()}


def word_probabilities(corpus: Iterable) -> FrequencyTable:
    """Relative frequencies of surface (unstemmed, lowercase) tokens over a corpus."""
    counts: Counter[str] = Counter()
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        counts.update(t.lower() for t in doc.flat_surface)
    total = sum(counts.values())
    if not n_docs or not total:
        raise DataError("cannot estimate word probabilities from an empty corpus")
    return FrequencyTable(dict(counts), total)


def sif_weight(word: str, freq: FrequencyTable, a: float = DEFAULT_SIF_A) -> float:
    if a <= 0:
        raise ValueError(f"SIF parameter a must be positive, got {a}")
    return a / (a + freq.p(word))


@dataclass(frozen=True)
class DocEmbedding:
    doc_id: str
    vector: np.ndarray
    tokens_used: int
    tokens_oov: int


def embed_tokens(tokens: Sequence[str], store: WordVectorStore, freq: FrequencyTable, a: float = DEFAULT_SIF_A, doc_id: str = "") -> DocEmbedding:
    """Mean of sif_weight(w) * v_w over the in-vocabulary tokens."""
    total = np.zeros(store.dimension)
    used = oov = 0
    for tok in tokens:
        vec = store.get(tok)
        if vec is None:
            oov += 1
            continue
        total += sif_weight(tok, freq, a) * vec
        used += 1
    if not used:
        raise EmptyEmbedding(f"document {doc_id!r}: none of its {oov} tokens has a vector")
    return DocEmbedding(doc_id, total / used, used, oov)


def embed_document(summary, store: WordVectorStore, freq: FrequencyTable, a: float = DEFAULT_SIF_A) -> DocEmbedding:
    """Embed a Summary (or TokenizedDocument) from its unstemmed surface tokens."""
    return embed_tokens(summary.surface, store, freq, a, doc_id=summary.doc_id)


def remove_principal_component(embeddings: Sequence[DocEmbedding]) -> list[DocEmbedding]:
    """Project out the first singular direction shared by a set of embeddings.

    This is the optional second step of SIF; the pipeline leaves it off unless
    ``embedding.pc_removal`` is set.
    """
    if len(embeddings) < 2:
        return list(embeddings)
    m = np.vstack([e.vector for e in embeddings])
    _, _, vt = np.linalg.svd(m, full_matrices=False)
    u = vt[0]
    out = []
    for e in embeddings:
        v = e.vector - u * float(u @ e.vector)
        out.append(DocEmbedding(e.doc_id, v, e.tokens_used, e.tokens_oov))
    return out

