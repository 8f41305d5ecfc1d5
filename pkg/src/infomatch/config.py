"""Run configuration: a JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .embed import DEFAULT_SIF_A, FORMATS
from .errors import ConfigError
from .evaluate import StoreSource, _ALIASES
from .preprocess import PreprocessConfig
from .similarity import DEFAULT_SUPPORT_CAP, ScoringOptions
from .summarize import SummarizerConfig

KNOWN_KEYS = {
    "corpus", "votes", "pairs", "embeddings", "embedding", "summarizer", "metric",
    "wmd", "sif_a", "pc_removal", "preprocess", "seed", "test_fraction", "out",
    "vote_threshold", "calibration",
}


@dataclass
class RunConfig:
    corpus: list[Path] = field(default_factory=list)
    votes: Path | None = None
    pairs: Path | None = None
    embeddings: dict[str, StoreSource] = field(default_factory=dict)
    embedding: str = "word2vec"
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    metric: str = "neg_wmd"
    support_cap: int = DEFAULT_SUPPORT_CAP
    sif_mass: bool = False
    sif_a: float = DEFAULT_SIF_A
    pc_removal: bool = False
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    seed: int | None = None
    test_fraction: float = 0.2
    out: Path = Path("out")
    vote_threshold: int = 5
    calibration: Path | None = None

    @property
    def scoring(self) -> ScoringOptions:
        return ScoringOptions(metric=self.metric, sif_a=self.sif_a, support_cap=self.support_cap, sif_mass=self.sif_mass)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def validate(self, need_corpus: bool = True, need_labels: bool = True, need_stores: bool = True) -> None:
        if self.seed is None:
            raise ConfigError("a seed is required (config 'seed' or --seed)")
        missing = []
        if need_corpus:
            if not self.corpus:
                raise ConfigError("no corpus files configured")
            missing += [p for p in self.corpus if not p.exists()]
        if need_labels:
            if self.pairs is None and self.votes is None:
                raise ConfigError("configure either 'pairs' or 'votes'")
            missing += [p for p in (self.pairs, self.votes) if p is not None and not p.exists()]
        if need_stores:
            if not self.embeddings:
                raise ConfigError("no embeddings configured")
        if missing:
            raise ConfigError("missing input files: " + ", ".join(str(p) for p in missing))
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


def normalize_metric(name: str) -> str:
    metric = _ALIASES.get(name.lower(), name.lower())
    if metric not in ("cosine", "neg_wmd"):
        raise ConfigError(f"unknown metric {name!r}; use cosine or wmd")
    return metric


def load_config(path=None) -> RunConfig:
    """Read a JSON config; relative paths resolve against the file's directory."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return config_from_dict(data, path.parent)


def config_from_dict(data: dict, base: Path = Path(".")) -> RunConfig:
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def resolve(p):
        return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

    corpus = data.get("corpus", [])
    if isinstance(corpus, str):
        corpus = [corpus]
    embeddings = {}
    for name, entry in (data.get("embeddings") or {}).items():
        if isinstance(entry, str):
            entry = {"path": entry}
        fmt = entry.get("format", "text")
        if fmt not in FORMATS:
            raise ConfigError(f"embedding {name!r}: unknown format {fmt!r}")
        embeddings[_ALIASES.get(name, name)] = StoreSource(str(resolve(entry["path"])), fmt)

    embedding = data.get("embedding", "word2vec")
    sif_a = data.get("sif_a", DEFAULT_SIF_A)
    pc_removal = data.get("pc_removal", False)
    if isinstance(embedding, dict):
        # nested form: {"name", "path", "format", "sif_a", "pc_removal"}
        extra = set(embedding) - {"name", "path", "format", "sif_a", "pc_removal"}
        if extra:
            raise ConfigError(f"unknown embedding keys: {sorted(extra)}")
        sif_a = embedding.get("sif_a", sif_a)
        pc_removal = embedding.get("pc_removal", pc_removal)
        name = embedding.get("name", "word2vec")
        if "path" in embedding:
            fmt = embedding.get("format", "text")
            if fmt not in FORMATS:
                raise ConfigError(f"embedding {name!r}: unknown format {fmt!r}")
            embeddings[_ALIASES.get(name, name)] = StoreSource(str(resolve(embedding["path"])), fmt)
        embedding = name
    embedding = _ALIASES.get(embedding, embedding)

    wmd = data.get("wmd") or {}
    unknown_wmd = set(wmd) - {"support_cap", "sif_mass"}
    if unknown_wmd:
        raise ConfigError(f"unknown wmd keys: {sorted(unknown_wmd)}")
    try:
        summarizer = SummarizerConfig.from_dict(data.get("summarizer"))
        prep = dict(data.get("preprocess") or {})
        if prep.get("abbreviations_path"):
            prep["abbreviations_path"] = str(resolve(prep["abbreviations_path"]))
        if prep.get("stopwords_path"):
            prep["stopwords_path"] = str(resolve(prep["stopwords_path"]))
        preprocess = PreprocessConfig.from_dict(prep)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        corpus=[resolve(p) for p in corpus],
        votes=resolve(data.get("votes")),
        pairs=resolve(data.get("pairs")),
        embeddings=embeddings,
        embedding=embedding,
        summarizer=summarizer,
        metric=normalize_metric(data.get("metric", "wmd")),
        support_cap=int(wmd.get("support_cap", DEFAULT_SUPPORT_CAP)),
        sif_mass=bool(wmd.get("sif_mass", False)),
        sif_a=float(sif_a),
        pc_removal=bool(pc_removal),
        preprocess=preprocess,
        seed=data.get("seed"),
        test_fraction=float(data.get("test_fraction", 0.2)),
        out=resolve(data.get("out", "out")),
        vote_threshold=int(data.get("vote_threshold", 5)),
        calibration=resolve(data.get("calibration")),
    )
