"""Sentence splitting, tokenization, stopword removal and Porter stemming."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyDocument

# letters/digits, optionally joined by single inner hyphens: "covid-19"
TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*")

# terminator, optional closing quotes/brackets, then whitespace or end
_BOUNDARY_RE = re.compile(r"[.?!]+[\"'’”)\]]*(?=\s|$)")
_PARAGRAPH_RE = re.compile(r"\n\s*\n")


def _read_wordlist(text: str) -> frozenset[str]:
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return _read_wordlist(resources.files("infomatch").joinpath("data/stopwords.txt").read_text("utf-8"))


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    return _read_wordlist(resources.files("infomatch").joinpath("data/abbreviations.txt").read_text("utf-8"))


def load_wordlist(path) -> frozenset[str]:
    return _read_wordlist(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# sentences and tokens


def split_sentences(text: str, abbreviations: Iterable[str] | None = None) -> list[str]:
    """Split ``text`` at ``.``, ``?`` or ``!`` followed by whitespace or end of text.

    A period ending a word from ``abbreviations`` (compared lowercase, with the
    period) does not end a sentence. Blank lines always do.
    """
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(a.lower() for a in abbreviations)
    sentences = []
    for para in _PARAGRAPH_RE.split(text):
        start = 0
        for m in _BOUNDARY_RE.finditer(para):
            if m.group().startswith(".") and len(m.group().rstrip("\"'’”)]")) == 1:
                word_start = para.rfind(" ", start, m.start()) + 1
                word_start = max(word_start, para.rfind("\n", start, m.start()) + 1, start)
                word = para[word_start : m.start() + 1].lstrip("(\"'‘“[").lower()
                if word in abbrevs:
                    continue
            chunk = para[start : m.end()].strip()
            if chunk:
                sentences.append(chunk)
            start = m.end()
        tail = para[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


def tokenize(text: str) -> list[str]:
    """Lowercased runs of letters and digits; inner hyphens are kept."""
    return [m.group().lower() for m in TOKEN_RE.finditer(text)]


def remove_stopwords(tokens: Sequence[str], stoplist: Iterable[str] | None = None) -> list[str]:
    stop = default_stopwords() if stoplist is None else stoplist
    if not isinstance(stop, (set, frozenset)):
        stop = frozenset(stop)
    return [t for t in tokens if t not in stop]


# --------------------------------------------------------------------------
# Porter stemmer (the original 1980 algorithm)

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """m in [C](VC){m}[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_consonant(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    n = len(word)
    return (
        _is_consonant(word, n - 3)
        and not _is_consonant(word, n - 2)
        and _is_consonant(word, n - 1)
        and word[-1] not in "wxy"
    )


def _replace_if(word: str, rules, min_measure: int) -> str:
    """Apply the first rule whose suffix matches; the rule fires only if m(stem) > min_measure."""
    for suffix, repl in rules:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > min_measure:
                return stem + repl
            return word
    return word


_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)
_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)
_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-2]
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w: str) -> str:
    if w.endswith("eed"):
        return w[:-1] if _measure(w[:-3]) > 0 else w
    for suffix in ("ed", "ing"):
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if not _has_vowel(stem):
                return w
            if stem.endswith(("at", "bl", "iz")):
                return stem + "e"
            if _ends_double_consonant(stem) and stem[-1] not in "lsz":
                return stem[:-1]
            if _measure(stem) == 1 and _ends_cvc(stem):
                return stem + "e"
            return stem
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if suffix == "ion" and not stem.endswith(("s", "t")):
                return w
            return stem if _measure(stem) > 1 else w
    return w


def _step5a(w: str) -> str:
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return w


def _step5b(w: str) -> str:
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        return w[:-1]
    return w


@lru_cache(maxsize=65536)
def porter_stem(token: str) -> str:
    """Stem a lowercase ASCII word; anything else is returned unchanged."""
    if len(token) <= 2 or not (token.isascii() and token.isalpha() and token.islower()):
        return token
    w = _step1a(token)
    w = _step1b(w)
    w = _step1c(w)
    w = _replace_if(w, _STEP2, 0)
    w = _replace_if(w, _STEP3, 0)
    w = _step4(w)
    w = _step5a(w)
    return _step5b(w)


# --------------------------------------------------------------------------
# documents


@dataclass(frozen=True)
class PreprocessConfig:
    stemming: bool = True
    stopwords: bool = True
    abbreviations_path: str | None = None
    stopwords_path: str | None = None

    @classmethod
    def from_dict(cls, data: dict | None) -> "PreprocessConfig":
        data = dict(data or {})
        unknown = set(data) - {"stemming", "stopwords", "abbreviations_path", "stopwords_path"}
        if unknown:
            raise ValueError(f"unknown preprocess keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Sentence:
    """One sentence of a document.

    ``tokens`` feed summarizer statistics (stemmed when stemming is on);
    ``surface`` holds the matching unstemmed lowercase words, aligned 1:1 with
    ``tokens``, and is what embedding lookups use.
    """

    index: int
    raw_text: str
    tokens: tuple[str, ...]
    surface: tuple[str, ...]


@dataclass(frozen=True)
class TokenizedDocument:
    doc_id: str
    sentences: tuple[Sentence, ...]

    @property
    def flat_tokens(self) -> list[str]:
        return [t for s in self.sentences for t in s.tokens]

    @property
    def flat_surface(self) -> list[str]:
        return [t for s in self.sentences for t in s.surface]

    surface = flat_surface

    def to_dict(self) -> dict:
        return {
            "id": self.doc_id,
            "sentences": [
                {"index": s.index, "text": s.raw_text, "tokens": list(s.tokens), "surface": list(s.surface)}
                for s in self.sentences
            ],
        }


def render(doc: TokenizedDocument) -> str:
    """Plain text made from the processed tokens, one sentence per line."""
    return "\n\n".join(" ".join(s.tokens) + "." for s in doc.sentences if s.tokens)


def preprocess(document, config: PreprocessConfig | None = None, doc_id: str | None = None) -> TokenizedDocument:
    """Split ``document`` (a Document or a string) into processed sentences."""
    config = config or PreprocessConfig()
    if isinstance(document, str):
        text, doc_id = document, doc_id or ""
    else:
        text, doc_id = document.text, doc_id or document.id
    abbrevs = load_wordlist(config.abbreviations_path) if config.abbreviations_path else None
    stop = load_wordlist(config.stopwords_path) if config.stopwords_path else default_stopwords()

    sentences = []
    for raw in split_sentences(text, abbrevs):
        surface = tokenize(raw)
        if config.stopwords:
            surface = remove_stopwords(surface, stop)
        tokens = [porter_stem(t) for t in surface] if config.stemming else list(surface)
        sentences.append(Sentence(len(sentences), raw, tuple(tokens), tuple(surface)))

    if not any(s.tokens for s in sentences):
        raise EmptyDocument(f"document {doc_id!r} has no tokens after preprocessing")
    return TokenizedDocument(doc_id, tuple(sentences))
