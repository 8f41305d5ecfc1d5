"""Documents, annotator votes and labeled (news, guideline) pairs.

Votes from a fixed panel of annotators are collapsed into binary relevance
labels, agreement across the panel is measured with Fleiss' kappa, and the
labeled pairs are split into stratified train/test sets.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

SOURCES = ("news", "guideline")

VOTES_HEADER = ("news_id", "guideline_id", "votes_relevant", "votes_irrelevant")
PAIRS_HEADER = ("news_id", "guideline_id", "label")

# (upper bound inclusive, band); anything above the last bound is "perfect"
KAPPA_BANDS = (
    (0.20, "slight"),
    (0.40, "fair"),
    (0.60, "moderate"),
    (0.80, "substantial"),
)


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    source: str

    def __post_init__(self):
        if not self.id:
            raise DataError("document id must be nonempty")
        if not self.text:
            raise DataError(f"document {self.id!r} has empty text")
        if self.source not in SOURCES:
            raise DataError(f"document {self.id!r}: unknown source {self.source!r}")


@dataclass(frozen=True)
class VoteRecord:
    news_id: str
    guideline_id: str
    votes_relevant: int
    votes_irrelevant: int

    def __post_init__(self):
        if self.votes_relevant < 0 or self.votes_irrelevant < 0:
            raise DataError(f"negative vote count for pair ({self.news_id}, {self.guideline_id})")
        if self.annotator_count < 1:
            raise DataError(f"pair ({self.news_id}, {self.guideline_id}) has no votes")

    @property
    def annotator_count(self) -> int:
        return self.votes_relevant + self.votes_irrelevant


@dataclass(frozen=True)
class LabeledPair:
    news_id: str
    guideline_id: str
    label: int
    label_origin: str = "majority"

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label!r}")
        if self.label_origin not in ("majority", "tie_assigned", "given"):
            raise DataError(f"unknown label origin {self.label_origin!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.news_id, self.guideline_id)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[LabeledPair]
    test: list[LabeledPair]
    seed: int

    def counts(self) -> dict[str, dict[int, int]]:
        out = {}
        for name, part in (("train", self.train), ("test", self.test)):
            out[name] = {0: 0, 1: 0}
            for pair in part:
                out[name][pair.label] += 1
        return out


# --------------------------------------------------------------------------
# file formats


def load_corpus(path, source: str | None = None) -> list[Document]:
    """Read a JSON-lines corpus.

    Each line is an object with ``id`` and ``text`` and optionally ``source``.
    When ``source`` is given it applies to every line; a line carrying a
    different ``source`` is rejected.
    """
    path = Path(path)
    if source is not None and source not in SOURCES:
        raise DataError(f"unknown source {source!r}")
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", path, lineno)
            doc_id, text = obj.get("id"), obj.get("text")
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise ParseError("fields 'id' and 'text' must be strings", path, lineno)
            line_source = obj.get("source", source)
            if source is not None and line_source != source:
                raise ParseError(f"source {line_source!r} does not match {source!r}", path, lineno)
            if line_source is None:
                raise ParseError("no 'source' field and no source given", path, lineno)
            if doc_id in seen:
                raise ParseError(f"duplicate id {doc_id!r} (first seen on line {seen[doc_id]})", path, lineno)
            seen[doc_id] = lineno
            try:
                docs.append(Document(doc_id, text, line_source))
            except DataError as exc:
                raise ParseError(str(exc), path, lineno) from None
    if not docs:
        logger.warning("corpus file %s contains no documents", path)
    return docs


def write_corpus(path, docs: Iterable[Document]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "text": doc.text, "source": doc.source}, ensure_ascii=False))
            fh.write("\n")


def _read_csv(path, header: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row", path, 1) from None
        first = [h.strip() for h in first]
        missing = [h for h in header if h not in first]
        if missing:
            raise ParseError(f"header is missing columns {missing}", path, 1)
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(first):
                raise ParseError(f"expected {len(first)} fields, got {len(row)}", path, lineno)
            rows.append((lineno, dict(zip(first, (c.strip() for c in row)))))
    return rows


def _int_field(value: str, name: str, path, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{name} must be an integer, got {value!r}", path, lineno) from None


def load_votes(path) -> list[VoteRecord]:
    records = []
    for lineno, row in _read_csv(path, VOTES_HEADER):
        try:
            records.append(
                VoteRecord(
                    row["news_id"],
                    row["guideline_id"],
                    _int_field(row["votes_relevant"], "votes_relevant", path, lineno),
                    _int_field(row["votes_irrelevant"], "votes_irrelevant", path, lineno),
                )
            )
        except DataError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), path, lineno) from None
    return records


def load_pairs(path) -> list[LabeledPair]:
    pairs = []
    for lineno, row in _read_csv(path, PAIRS_HEADER):
        label = _int_field(row["label"], "label", path, lineno)
        if label not in (0, 1):
            raise ParseError(f"label must be 0 or 1, got {label}", path, lineno)
        origin = row.get("label_origin") or "given"
        try:
            pairs.append(LabeledPair(row["news_id"], row["guideline_id"], label, origin))
        except DataError as exc:
            raise ParseError(str(exc), path, lineno) from None
    return pairs


def write_pairs(path, pairs: Iterable[LabeledPair]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PAIRS_HEADER + ("label_origin",))
        for p in pairs:
            writer.writerow([p.news_id, p.guideline_id, p.label, p.label_origin])


def check_pairs_resolve(pairs, documents: dict[str, Document]) -> None:
    """Raise if a pair names a missing document or one of the wrong source."""
    for p in pairs:
        for doc_id, want in ((p.news_id, "news"), (p.guideline_id, "guideline")):
            doc = documents.get(doc_id)
            if doc is None:
                raise DataError(f"pair ({p.news_id}, {p.guideline_id}) references unknown document {doc_id!r}")
            if doc.source != want:
                raise DataError(f"document {doc_id!r} is a {doc.source}, expected {want}")


# --------------------------------------------------------------------------
# labels and agreement


def annotator_count(records: Sequence[VoteRecord]) -> int:
    counts = {r.annotator_count for r in records}
    if len(counts) != 1:
        raise DataError(f"records disagree on the number of annotators: {sorted(counts)}")
    return counts.pop()


def aggregate_votes(
    records: Sequence[VoteRecord],
    threshold: int = 5,
    seed: int = 0,
    assign_ties: bool = True,
) -> list[LabeledPair]:
    """Collapse vote counts into binary labels.

    A pair with at least ``threshold`` relevant votes is labeled 1, at least
    ``threshold`` irrelevant votes 0. Exact ties are shuffled with ``seed``
    and labeled alternately 1, 0, 1, ... so tied pairs are spread evenly over
    both classes. Pairs that are neither (possible only when threshold > A/2 + 1)
    are dropped with a warning. Output preserves input order.
    """
    if not records:
        return []
    n_annot = annotator_count(records)
    if 2 * threshold <= n_annot:
        raise DataError(f"threshold {threshold} must exceed half the annotator count {n_annot}")
    if assign_ties and n_annot % 2:
        raise DataError(f"tie assignment needs an even number of annotators, got {n_annot}")

    labels: list[tuple[int, str] | None] = [None] * len(records)
    ties = []
    dropped = 0
    for i, r in enumerate(records):
        if r.votes_relevant >= threshold:
            labels[i] = (1, "majority")
        elif r.votes_irrelevant >= threshold:
            labels[i] = (0, "majority")
        elif assign_ties and r.votes_relevant == r.votes_irrelevant:
            ties.append(i)
        else:
            dropped += 1

    order = list(ties)
    random.Random(seed).shuffle(order)
    for rank, i in enumerate(order):
        labels[i] = (1 - rank % 2, "tie_assigned")

    if dropped:
        logger.warning("%d pairs below the %d-vote threshold were left unlabeled", dropped, threshold)
    return [
        LabeledPair(r.news_id, r.guideline_id, lab[0], lab[1])
        for r, lab in zip(records, labels)
        if lab is not None
    ]


def annotation_matrix(records: Sequence[VoteRecord]) -> np.ndarray:
    """N x 2 matrix of (relevant, irrelevant) counts, one row per pair."""
    return np.array([[r.votes_relevant, r.votes_irrelevant] for r in records], dtype=np.int64)


def _check_matrix(matrix) -> np.ndarray:
    data = np.asarray(matrix)
    if data.ndim != 2:
        raise DataError("annotation matrix must be 2-dimensional")
    if not np.issubdtype(data.dtype, np.integer):
        if not np.all(np.equal(np.mod(data, 1), 0)):
            raise DataError("annotation counts must be integers")
        data = data.astype(np.int64)
    if (data < 0).any():
        raise DataError("annotation counts must be non-negative")
    if data.shape[0] < 2:
        raise DataError("Fleiss' kappa needs at least 2 items")
    sums = data.sum(axis=1)
    if not (sums == sums[0]).all():
        raise DataError("every item must be rated by the same number of annotators")
    if sums[0] < 2:
        raise DataError("Fleiss' kappa needs at least 2 annotators per item")
    return data


def fleiss_kappa(matrix) -> float:
    """Fleiss' kappa for an items x categories count matrix.

    kappa = (P_bar - Pe_bar) / (1 - Pe_bar), with P_bar the mean per-item
    pairwise agreement and Pe_bar the agreement expected from the marginal
    category proportions. When every rating falls in one category Pe_bar = 1
    and the result is defined as 1.0.
    """
    data = _check_matrix(matrix).astype(np.float64)
    n_items = data.shape[0]
    n_raters = data[0].sum()
    p_j = data.sum(axis=0) / (n_items * n_raters)
    p_i = ((data * data).sum(axis=1) - n_raters) / (n_raters * (n_raters - 1))
    p_bar = p_i.mean()
    pe_bar = float((p_j * p_j).sum())
    if math.isclose(pe_bar, 1.0, rel_tol=0.0, abs_tol=1e-15):
        return 1.0
    return float((p_bar - pe_bar) / (1.0 - pe_bar))


def interpret_kappa(kappa: float) -> str:
    if not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite, got {kappa}")
    if kappa < 0:
        return "no agreement"
    for upper, band in KAPPA_BANDS:
        if kappa <= upper:
            return band
    return "perfect"


# --------------------------------------------------------------------------
# splitting


def _ceil_fraction(n: int, fraction: float) -> int:
    # round first so 500 * 0.2 = 100.00000000000001 does not ceil to 101
    return math.ceil(round(n * fraction, 9))


def split_dataset(pairs: Sequence[LabeledPair], test_fraction: float = 0.2, seed: int = 0) -> DatasetSplit:
    """Stratified split; each class sends ceil(n_class * test_fraction) items to test.

    With 518 relevant and 482 irrelevant pairs at 0.2 this gives 104/97 test
    and 414/385 train.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_label: dict[int, list[int]] = {0: [], 1: []}
    for i, p in enumerate(pairs):
        by_label[p.label].append(i)
    for label, idx in by_label.items():
        if len(idx) < 2:
            raise DataError(f"class {label} has {len(idx)} items; stratified split needs at least 2 per class")

    rng = random.Random(seed)
    test_idx: set[int] = set()
    for label in (0, 1):
        idx = list(by_label[label])
        rng.shuffle(idx)
        n_test = min(max(_ceil_fraction(len(idx), test_fraction), 1), len(idx) - 1)
        test_idx.update(idx[:n_test])

    train = [p for i, p in enumerate(pairs) if i not in test_idx]
    test = [p for i, p in enumerate(pairs) if i in test_idx]
    return DatasetSplit(train=train, test=test, seed=seed)
