"""Threshold calibration with ROC curves and Youden's index, and the model grid.

A model is one (embedding, summarizer, metric) combination. Its cutoff is
the Youden-optimal threshold over the training pairs; the same cutoff is then
applied unchanged to the test pairs.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import LabeledPair
from .embed import DocEmbedding, WordVectorStore, embed_document, load_vectors, remove_principal_component, word_probabilities
from .errors import DataError, InfomatchError
from .similarity import ScoringOptions, cosine_similarity, nbow, wmd
from .summarize import KINDS, Summary, SummarizerConfig, summarize

logger = logging.getLogger(__name__)

EMBEDDINGS = ("word2vec", "glove")
SUMMARIZERS = KINDS
METRICS = ("cosine", "neg_wmd")

_ALIASES = {
    "w2v": "word2vec",
    "word2vec": "word2vec",
    "glove": "glove",
    "wmd": "neg_wmd",
    "neg_wmd": "neg_wmd",
    "cosine": "cosine",
    "cos": "cosine",
    "summa": "textrank_overlap",
    "gensim": "textrank_bm25",
    "pyrank": "textrank_cosine",
    "pytextrank": "textrank_cosine",
    "kl": "klsum",
    "-": "none",
}

EMBEDDING_LABELS = {"word2vec": "W2V", "glove": "Glove"}
SUMMARIZER_LABELS = {
    "none": "-",
    "lexrank": "LexRank",
    "textrank_overlap": "TextRank-overlap",
    "textrank_bm25": "TextRank-BM25",
    "textrank_cosine": "TextRank-cosine",
    "reduction": "Reduction",
    "luhn": "Luhn",
    "lsa": "LSA",
    "klsum": "KL",
}
METRIC_LABELS = {"neg_wmd": "WMD", "cosine": "Cosine"}
TOP10_HEADER = ("Embedding", "Summarizer", "Metric", "CutoffPoint", "TPR", "FPR", "Youden's index")


@dataclass(frozen=True, order=True)
class ModelConfig:
    embedding: str
    summarizer: str
    metric: str

    def __post_init__(self):
        if self.summarizer not in SUMMARIZERS:
            raise ValueError(f"unknown summarizer {self.summarizer!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not self.embedding:
            raise ValueError("embedding name must be nonempty")

    @property
    def slug(self) -> str:
        return f"{self.embedding}-{self.summarizer}-{self.metric}"

    @classmethod
    def parse(cls, text: str) -> "ModelConfig":
        """Parse ``emb,summarizer,metric``; accepts short names like ``w2v,lexrank,wmd``."""
        parts = [p.strip().lower() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'embedding,summarizer,metric', got {text!r}")
        emb, summ, metric = (_ALIASES.get(p, p) for p in parts)
        return cls(emb, summ, metric)

    def to_dict(self) -> dict:
        return {"embedding": self.embedding, "summarizer": self.summarizer, "metric": self.metric}


def full_grid(embeddings: Sequence[str] = EMBEDDINGS) -> list[ModelConfig]:
    return [ModelConfig(e, s, m) for e in embeddings for s in SUMMARIZERS for m in METRICS]


# --------------------------------------------------------------------------
# classification rates


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


def confusion(scores: Sequence[float], labels: Sequence[int], threshold: float) -> Confusion:
    """Counts with 'relevant' predicted iff score >= threshold."""
    tp = fp = tn = fn = 0
    for s, y in zip(scores, labels, strict=True):
        if s >= threshold:
            if y:
                tp += 1
            else:
                fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, tn, fn)


def tpr(counts: Confusion) -> float:
    if counts.tp + counts.fn == 0:
        raise DataError("TPR undefined: no relevant pairs")
    return counts.tp / (counts.tp + counts.fn)


def fpr(counts: Confusion) -> float:
    if counts.fp + counts.tn == 0:
        raise DataError("FPR undefined: no irrelevant pairs")
    return counts.fp / (counts.fp + counts.tn)


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float
    tp: int
    fp: int


@dataclass(frozen=True)
class RocCurve:
    """Points ordered by descending threshold, from (0, 0) to (1, 1)."""

    points: tuple[RocPoint, ...]
    positives: int
    negatives: int

    def auc(self) -> float:
        x = [p.fpr for p in self.points]
        y = [p.tpr for p in self.points]
        return float(np.trapezoid(y, x)) if hasattr(np, "trapezoid") else float(np.trapz(y, x))


def _check_binary(labels) -> tuple[int, int]:
    pos = sum(1 for y in labels if y == 1)
    neg = sum(1 for y in labels if y == 0)
    if pos + neg != len(labels):
        raise DataError("labels must be 0 or 1")
    if not pos or not neg:
        raise DataError("ROC analysis needs both relevant and irrelevant pairs")
    return pos, neg


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """Evaluate every distinct score as a threshold, plus one just above the maximum."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    pos, neg = _check_binary(labels)
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    distinct = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tps = np.cumsum(y)[distinct]
    fps = (distinct + 1) - tps

    top = float(np.nextafter(s[0], np.inf))
    points = [RocPoint(top, 0.0, 0.0, 0, 0)]
    for idx, tp, fp in zip(distinct, tps, fps):
        points.append(RocPoint(float(s[idx]), int(tp) / pos, int(fp) / neg, int(tp), int(fp)))
    return RocCurve(tuple(points), pos, neg)


def youden_optimal(curve: RocCurve) -> tuple[float, float]:
    """Threshold maximizing J = TPR - FPR; ties go to the higher threshold.

    Candidates are compared on exact integer counts (tp * N - fp * P), so
    equal J values are recognized as ties regardless of rounding.
    """
    if not curve.points:
        raise DataError("empty ROC curve")
    best = curve.points[0]
    best_key = best.tp * curve.negatives - best.fp * curve.positives
    for p in curve.points[1:]:
        key = p.tp * curve.negatives - p.fp * curve.positives
        if key > best_key:
            best, best_key = p, key
    return best.threshold, best.tpr - best.fpr


# --------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class StoreSource:
    """A vector file to load lazily inside the grid."""

    path: str
    format: str = "text"


class PairScorer:
    """Summarizes, embeds and scores document pairs, caching per-document work.

    ``documents`` maps id to TokenizedDocument. The word-frequency table for
    SIF is estimated once over all of them. Caches are filled under a lock,
    so one scorer can serve several grid workers.
    """

    def __init__(self, documents: Mapping, summarizer: SummarizerConfig | None = None, scoring: ScoringOptions | None = None, pc_removal: bool = False):
        if not documents:
            raise DataError("no documents to score")
        self.documents = dict(documents)
        self.summarizer = summarizer or SummarizerConfig()
        self.scoring = scoring or ScoringOptions()
        self.pc_removal = pc_removal
        self.freq = word_probabilities(self.documents[k] for k in sorted(self.documents))
        self._summaries: dict[tuple[str, str], Summary] = {}
        self._embeddings: dict[tuple[str, str, int], DocEmbedding] = {}
        self._lock = threading.RLock()

    def summary(self, doc_id: str, kind: str) -> Summary:
        key = (doc_id, kind)
        with self._lock:
            cached = self._summaries.get(key)
        if cached is not None:
            return cached
        doc = self.documents.get(doc_id)
        if doc is None:
            raise DataError(f"unknown document id {doc_id!r}")
        result = summarize(doc, self.summarizer.with_kind(kind))
        with self._lock:
            self._summaries.setdefault(key, result)
        return result

    def embedding(self, doc_id: str, kind: str, store: WordVectorStore) -> DocEmbedding:
        key = (doc_id, kind, id(store))
        with self._lock:
            cached = self._embeddings.get(key)
            if cached is not None:
                return cached
            if self.pc_removal:
                self._fill_pc_removed(kind, store)
                return self._embeddings[key]
        emb = embed_document(self.summary(doc_id, kind), store, self.freq, self.scoring.sif_a)
        with self._lock:
            self._embeddings.setdefault(key, emb)
        return emb

    def _fill_pc_removed(self, kind, store):
        ids, embs = [], []
        for doc_id in sorted(self.documents):
            try:
                embs.append(embed_document(self.summary(doc_id, kind), store, self.freq, self.scoring.sif_a))
                ids.append(doc_id)
            except DataError:
                continue
        for doc_id, emb in zip(ids, remove_principal_component(embs)):
            self._embeddings[(doc_id, kind, id(store))] = emb
        missing = set(self.documents) - set(ids)
        if missing:
            raise DataError(f"{len(missing)} documents have no in-vocabulary tokens")

    def score(self, news_id: str, guideline_id: str, summarizer: str, metric: str, store: WordVectorStore) -> float:
        if metric == "cosine":
            u = self.embedding(news_id, summarizer, store).vector
            v = self.embedding(guideline_id, summarizer, store).vector
            return cosine_similarity(u, v)
        opts = self.scoring
        sif_a = opts.sif_a if opts.sif_mass else None
        p = nbow(self.summary(news_id, summarizer).surface, store, self.freq, sif_a)
        q = nbow(self.summary(guideline_id, summarizer).surface, store, self.freq, sif_a)
        distance = wmd(p, q, opts.support_cap)
        return -distance if distance else 0.0

    def score_pairs(self, pairs: Sequence[LabeledPair], config: ModelConfig, store: WordVectorStore):
        """Scores and labels for the pairs that could be scored, plus the failures."""
        scores, labels, failures = [], [], []
        for pair in pairs:
            try:
                s = self.score(pair.news_id, pair.guideline_id, config.summarizer, config.metric, store)
            except DataError as exc:
                failures.append((pair, str(exc)))
                continue
            scores.append(s)
            labels.append(pair.label)
        return scores, labels, failures


# --------------------------------------------------------------------------
# reports


@dataclass
class ModelReport:
    config: ModelConfig
    status: str = "ok"
    cutoff: float | None = None
    train_J: float | None = None
    train_TPR: float | None = None
    train_FPR: float | None = None
    train_AUC: float | None = None
    test_TPR: float | None = None
    test_FPR: float | None = None
    test_J: float | None = None
    test_AUC: float | None = None
    excluded_train: int = 0
    excluded_test: int = 0
    runtime_seconds: float = 0.0
    error: str | None = None
    train_curve: RocCurve | None = field(default=None, repr=False)
    test_curve: RocCurve | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "config": self.config.to_dict(),
            "slug": self.config.slug,
            "status": self.status,
            "cutoff": self.cutoff,
            "train_J": self.train_J,
            "train_TPR": self.train_TPR,
            "train_FPR": self.train_FPR,
            "train_AUC": self.train_AUC,
            "test_TPR": self.test_TPR,
            "test_FPR": self.test_FPR,
            "test_J": self.test_J,
            "test_AUC": self.test_AUC,
            "excluded_train": self.excluded_train,
            "excluded_test": self.excluded_test,
            "error": self.error,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime_seconds
        return out


def evaluate_model(config: ModelConfig, train_pairs, test_pairs, scorer: PairScorer, stores: Mapping[str, WordVectorStore]) -> ModelReport:
    """Calibrate the cutoff on ``train_pairs`` and measure it on ``test_pairs``."""
    start = time.perf_counter()
    report = ModelReport(config)
    try:
        store = stores.get(config.embedding)
        if store is None:
            raise DataError(f"no vector store named {config.embedding!r}")
        tr_scores, tr_labels, tr_fail = scorer.score_pairs(train_pairs, config, store)
        te_scores, te_labels, te_fail = scorer.score_pairs(test_pairs, config, store)
        report.excluded_train, report.excluded_test = len(tr_fail), len(te_fail)
        for pair, msg in tr_fail + te_fail:
            logger.info("%s: excluded (%s, %s): %s", config.slug, pair.news_id, pair.guideline_id, msg)

        train_curve = roc_curve(tr_scores, tr_labels)
        cutoff, train_j = youden_optimal(train_curve)
        train_counts = confusion(tr_scores, tr_labels, cutoff)
        test_counts = confusion(te_scores, te_labels, cutoff)
        test_tpr, test_fpr = tpr(test_counts), fpr(test_counts)

        report.cutoff = cutoff
        report.train_J = train_j
        report.train_TPR, report.train_FPR = tpr(train_counts), fpr(train_counts)
        report.train_AUC = train_curve.auc()
        report.test_TPR, report.test_FPR = test_tpr, test_fpr
        report.test_J = test_tpr - test_fpr
        report.train_curve = train_curve
        report.test_curve = roc_curve(te_scores, te_labels)
        report.test_AUC = report.test_curve.auc()
    except InfomatchError as exc:
        report.status, report.error = "failed", str(exc)
    report.runtime_seconds = time.perf_counter() - start
    return report


def _sort_key(r: ModelReport):
    if r.ok:
        return (0, -r.test_J, -r.train_J, r.config.slug)
    return (1, 0.0, 0.0, r.config.slug)


def _thread_count(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("INFOMATCH_THREADS", "")
        threads = int(env) if env.strip().isdigit() else 1
    return max(1, threads)


def run_grid(
    train_pairs: Sequence[LabeledPair],
    test_pairs: Sequence[LabeledPair],
    scorer: PairScorer,
    stores: Mapping[str, "WordVectorStore | StoreSource"],
    configs: Iterable[ModelConfig] | None = None,
    threads: int | None = None,
) -> list[ModelReport]:
    """Evaluate every configuration; reports come back sorted by test J.

    A store that fails to load fails every configuration using it; the rest
    of the grid still runs.
    """
    loaded: dict[str, WordVectorStore] = {}
    load_errors: dict[str, str] = {}
    for name in sorted(stores):
        src = stores[name]
        if isinstance(src, WordVectorStore):
            loaded[name] = src
            continue
        try:
            loaded[name] = load_vectors(src.path, src.format, name=name)
        except (InfomatchError, OSError) as exc:
            load_errors[name] = f"could not load vector store {name!r}: {exc}"
            logger.error(load_errors[name])

    configs = list(configs) if configs is not None else full_grid(tuple(sorted(stores, key=_embedding_order)))

    def run(cfg: ModelConfig) -> ModelReport:
        if cfg.embedding in load_errors:
            return ModelReport(cfg, status="failed", error=load_errors[cfg.embedding])
        return evaluate_model(cfg, train_pairs, test_pairs, scorer, loaded)

    n_threads = _thread_count(threads)
    if n_threads == 1:
        reports = [run(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            reports = list(pool.map(run, configs))
    return sorted(reports, key=_sort_key)


def _embedding_order(name: str):
    return (EMBEDDINGS.index(name) if name in EMBEDDINGS else len(EMBEDDINGS), name)


# --------------------------------------------------------------------------
# output files


def top10_rows(reports: Sequence[ModelReport], n: int = 10) -> list[dict[str, str]]:
    rows = []
    for r in [r for r in reports if r.ok][:n]:
        rows.append(
            {
                "Embedding": EMBEDDING_LABELS.get(r.config.embedding, r.config.embedding),
                "Summarizer": SUMMARIZER_LABELS[r.config.summarizer],
                "Metric": METRIC_LABELS[r.config.metric],
                "CutoffPoint": f"{r.cutoff:.3f}",
                "TPR": f"{r.test_TPR:.3f}",
                "FPR": f"{r.test_FPR:.3f}",
                "Youden's index": f"{r.test_J:.3f}",
            }
        )
    return rows


def write_roc_csv(path, curve: RocCurve) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "tpr", "fpr"])
        for p in curve.points:
            writer.writerow([repr(p.threshold), repr(p.tpr), repr(p.fpr)])


def write_reports(out_dir, reports: Sequence[ModelReport]) -> dict[str, Path]:
    """Write report.json, top10.csv, runtime.json and one roc_<slug>.csv per model.

    Everything except runtime.json is a pure function of the inputs and seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "top10": out / "top10.csv", "runtime": out / "runtime.json"}
    paths["report"].write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", encoding="utf-8")
    with paths["top10"].open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TOP10_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(top10_rows(reports))
    paths["runtime"].write_text(
        json.dumps({r.config.slug: round(r.runtime_seconds, 6) for r in reports}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    for r in reports:
        if r.train_curve is not None:
            write_roc_csv(out / f"roc_{r.config.slug}.csv", r.train_curve)
    return paths


def calibration_table(reports: Sequence[ModelReport]) -> dict[str, float]:
    return {r.config.slug: r.cutoff for r in reports if r.ok}
