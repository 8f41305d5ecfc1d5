"""Synthetic corpora with planted topical relevance.

Every news article and guideline is written about one topic. A topic owns a
small vocabulary whose word vectors cluster around a topic centroid, and all
documents also draw on a shared filler vocabulary. A pair is relevant exactly
when both documents share a topic, so a working pipeline should separate the
classes well.

Run ``python -m infomatch.synthetic OUT_DIR`` to write a complete fixture
(corpus, votes, two vector files and a run config).
"""

from __future__ import annotations

import argparse
import json
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, LabeledPair, VoteRecord, write_corpus
from .embed import WordVectorStore, save_vectors
from .preprocess import default_stopwords

_ONSETS = "b c d f g h j k l m n p r s t v z br cr dr fl gr pl pr sk st tr".split()
_NUCLEI = "a e i o u ai ea io ou".split()
_CODAS = ["", "", "n", "r", "l", "s", "m", "x"]


@dataclass
class SyntheticData:
    documents: list[Document]
    pairs: list[LabeledPair]
    votes: list[VoteRecord]
    stores: dict[str, WordVectorStore]
    topics: dict[str, int]


def _make_words(rng: random.Random, count: int, taken: set[str]) -> list[str]:
    stop = default_stopwords()
    words = []
    while len(words) < count:
        n_syll = rng.choice((2, 2, 3))
        w = "".join(rng.choice(_ONSETS) + rng.choice(_NUCLEI) for _ in range(n_syll)) + rng.choice(_CODAS)
        if w in taken or w in stop or len(w) < 4:
            continue
        taken.add(w)
        words.append(w)
    return words


def _sentence(rng: random.Random, topic_words, filler, oov, topical: bool) -> str:
    length = rng.randint(6, 11)
    words = []
    for _ in range(length):
        r = rng.random()
        if topical and r < 0.5:
            words.append(rng.choice(topic_words))
        elif r < 0.93:
            words.append(rng.choice(filler))
        else:
            words.append(rng.choice(oov))
    # a few stopwords so preprocessing has something to strip
    words.insert(rng.randrange(len(words)), rng.choice(("the", "is", "and", "of")))
    text = " ".join(words)
    return text[0].upper() + text[1:] + rng.choice((".", ".", ".", "!", "?"))


def _document(rng, topic_words, filler, oov, n_sentences: int) -> str:
    return " ".join(_sentence(rng, topic_words, filler, oov, rng.random() < 0.6) for _ in range(n_sentences))


def _vectors(words_by_topic, filler, dim: int, seed: int, spread: float, name: str) -> WordVectorStore:
    gen = np.random.default_rng(seed)
    words, rows = [], []
    for topic_words in words_by_topic:
        centre = gen.normal(scale=2.0, size=dim)
        for w in topic_words:
            words.append(w)
            rows.append(centre + gen.normal(scale=spread, size=dim))
    for w in filler:
        words.append(w)
        rows.append(gen.normal(scale=1.0, size=dim))
    # float32 so text and binary files hold identical values
    return WordVectorStore(words, np.asarray(rows, dtype=np.float32), name=name)


def planted_corpus(n_pairs: int = 60, n_topics: int = 6, seed: int = 0, dim: int = 16, tie_fraction: float = 0.1) -> SyntheticData:
    """Generate ``n_pairs`` labeled (news, guideline) pairs, half of them relevant."""
    rng = random.Random(seed)
    taken: set[str] = set()
    topic_vocab = [_make_words(rng, 12, taken) for _ in range(n_topics)]
    filler = _make_words(rng, 60, taken)
    oov = _make_words(rng, 10, taken)

    guidelines = []
    topics: dict[str, int] = {}
    for t in range(n_topics):
        for g in range(2):
            gid = f"g{t:02d}{g}"
            text = _document(rng, topic_vocab[t], filler, oov, rng.randint(6, 9))
            guidelines.append(Document(gid, text, "guideline"))
            topics[gid] = t

    news, pairs, votes = [], [], []
    for i in range(n_pairs):
        t = rng.randrange(n_topics)
        nid = f"n{i:03d}"
        news.append(Document(nid, _document(rng, topic_vocab[t], filler, oov, rng.randint(6, 10)), "news"))
        topics[nid] = t
        relevant = i % 2 == 0
        gt = t if relevant else rng.choice([x for x in range(n_topics) if x != t])
        gid = f"g{gt:02d}{rng.randrange(2)}"
        pairs.append(LabeledPair(nid, gid, int(relevant), "majority"))
        if rng.random() < tie_fraction:
            vr = 4
        else:
            vr = rng.choice((5, 6, 7, 8)) if relevant else rng.choice((0, 1, 2, 3))
        votes.append(VoteRecord(nid, gid, vr, 8 - vr))

    stores = {
        "word2vec": _vectors(topic_vocab, filler, dim, seed + 1, 0.6, "word2vec"),
        "glove": _vectors(topic_vocab, filler, dim, seed + 2, 0.9, "glove"),
    }
    return SyntheticData(news + guidelines, pairs, votes, stores, topics)


def write_fixture(out_dir, n_pairs: int = 60, seed: int = 0) -> Path:
    """Write corpus.jsonl, votes.csv, pairs.csv, vector files and config.json; return the config path."""
    from .corpus import write_pairs

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = planted_corpus(n_pairs=n_pairs, seed=seed)
    write_corpus(out / "corpus.jsonl", data.documents)
    with (out / "votes.csv").open("w", encoding="utf-8") as fh:
        fh.write("news_id,guideline_id,votes_relevant,votes_irrelevant\n")
        for v in data.votes:
            fh.write(f"{v.news_id},{v.guideline_id},{v.votes_relevant},{v.votes_irrelevant}\n")
    write_pairs(out / "pairs.csv", data.pairs)
    save_vectors(data.stores["word2vec"], out / "word2vec.bin", "word2vec_binary")
    save_vectors(data.stores["glove"], out / "glove.txt", "text")
    config = {
        "corpus": ["corpus.jsonl"],
        "votes": "votes.csv",
        "embeddings": {
            "word2vec": {"path": "word2vec.bin", "format": "word2vec_binary"},
            "glove": {"path": "glove.txt", "format": "text"},
        },
        "embedding": "word2vec",
        "summarizer": {"kind": "lexrank", "k": 5},
        "metric": "wmd",
        "seed": seed,
        "test_fraction": 0.2,
        "out": "out",
    }
    path = out / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic planted-topic fixture.")
    parser.add_argument("out_dir")
    parser.add_argument("--pairs", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    print(write_fixture(args.out_dir, args.pairs, args.seed))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
