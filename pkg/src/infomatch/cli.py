"""Command-line front end.

Subcommands: annotate, preprocess, evaluate, grid, match. Exit codes are
0 on success, 1 for usage or configuration errors, 2 for data errors and
3 for anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .config import RunConfig, load_config, normalize_metric
from .embed import load_vectors
from .errors import ConfigError, DataError, EmptyDocument
from .evaluate import (
    ModelConfig,
    PairScorer,
    calibration_table,
    full_grid,
    run_grid,
    write_reports,
)
from .preprocess import preprocess

logger = logging.getLogger("infomatch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--only", action="append", help="restrict to one model, e.g. w2v,lexrank,wmd (repeatable)")
    p.add_argument("--k", type=int, help="summary length in sentences")
    p.add_argument("--metric", choices=("cosine", "wmd"), help="similarity metric")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="infomatch", description="Match news articles to guidelines and calibrate relevance cutoffs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("annotate", help="aggregate annotator votes into labeled pairs")
    p.add_argument("votes", nargs="?", help="votes.csv (defaults to the config's 'votes')")
    p.add_argument("--threshold", type=int, help="votes needed for a majority label (default 5)")
    p.add_argument("--no-ties", action="store_true", help="drop tied pairs instead of assigning them")
    _common(p)

    p = sub.add_parser("preprocess", help="write tokenized documents as JSON lines")
    p.add_argument("corpus", nargs="*", help="corpus .jsonl files (defaults to the config's 'corpus')")
    _common(p)

    p = sub.add_parser("evaluate", help="calibrate and test a single model")
    _common(p)
    _model_flags(p)

    p = sub.add_parser("grid", help="evaluate the full embedding x summarizer x metric grid")
    _common(p)
    _model_flags(p)
    p.add_argument("--threads", type=int, help="worker threads (default: INFOMATCH_THREADS or 1)")

    p = sub.add_parser("match", help="rank guidelines for one news article")
    p.add_argument("news_id")
    p.add_argument("--cutoff", type=float, help="relevance cutoff (otherwise read from calibration.json)")
    p.add_argument("--calibration", help="calibration.json from a previous evaluate/grid run")
    p.add_argument("--json", action="store_true", help="print results as JSON")
    _common(p)
    _model_flags(p)
    return parser


# --------------------------------------------------------------------------
# helpers


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    base_overrides = {"seed": args.seed, "out": Path(args.out) if args.out else None}
    cfg = cfg.with_overrides(**base_overrides)
    if getattr(args, "k", None) is not None:
        if args.k < 1:
            raise ConfigError("--k must be at least 1")
        cfg.summarizer = cfg.summarizer.__class__(**{**cfg.summarizer.__dict__, "k": args.k})
    if getattr(args, "metric", None):
        cfg.metric = normalize_metric(args.metric)
    return cfg


def _selected_models(args, cfg: RunConfig, default_all: bool) -> list[ModelConfig]:
    if getattr(args, "only", None):
        try:
            return [ModelConfig.parse(text) for text in args.only]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if default_all:
        names = [e for e in ("word2vec", "glove") if e in cfg.embeddings] + sorted(
            e for e in cfg.embeddings if e not in ("word2vec", "glove")
        )
        grid = full_grid(tuple(names))
        if getattr(args, "metric", None):
            grid = [m for m in grid if m.metric == cfg.metric]
        return grid
    return [ModelConfig(cfg.embedding, cfg.summarizer.kind, cfg.metric)]


def _load_documents(cfg: RunConfig) -> tuple[dict, dict]:
    raw = {}
    for path in cfg.corpus:
        for doc in corpus_mod.load_corpus(path):
            if doc.id in raw:
                raise DataError(f"document id {doc.id!r} appears in more than one corpus file")
            raw[doc.id] = doc
    tokenized = {}
    for doc_id in sorted(raw):
        try:
            tokenized[doc_id] = preprocess(raw[doc_id], cfg.preprocess)
        except EmptyDocument as exc:
            logger.warning("skipping document: %s", exc)
    return raw, tokenized


def _labeled_pairs(cfg: RunConfig, raw_docs: dict):
    if cfg.pairs is not None:
        pairs = corpus_mod.load_pairs(cfg.pairs)
    else:
        pairs = corpus_mod.aggregate_votes(corpus_mod.load_votes(cfg.votes), cfg.vote_threshold, cfg.seed)
    corpus_mod.check_pairs_resolve(pairs, raw_docs)
    return pairs


def _write_calibration(out: Path, reports, cfg: RunConfig) -> Path:
    path = out / "calibration.json"
    existing = {}
    if path.exists():
        try:
            existing = json.loads(path.read_text(encoding="utf-8")).get("cutoffs", {})
        except (json.JSONDecodeError, AttributeError):
            existing = {}
    existing.update(calibration_table(reports))
    payload = {"seed": cfg.seed, "summarizer_k": cfg.summarizer.k, "cutoffs": dict(sorted(existing.items()))}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# commands


def cmd_annotate(args) -> int:
    cfg = _run_config(args)
    votes_path = Path(args.votes) if args.votes else cfg.votes
    if votes_path is None:
        raise ConfigError("no votes file given")
    if cfg.seed is None:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    threshold = args.threshold if args.threshold is not None else cfg.vote_threshold
    records = corpus_mod.load_votes(votes_path)
    if not records:
        raise DataError(f"{votes_path}: no vote records")
    pairs = corpus_mod.aggregate_votes(records, threshold, cfg.seed, assign_ties=not args.no_ties)
    kappa = corpus_mod.fleiss_kappa(corpus_mod.annotation_matrix(records))
    cfg.out.mkdir(parents=True, exist_ok=True)
    out_path = cfg.out / "pairs.csv"
    corpus_mod.write_pairs(out_path, pairs)
    n_rel = sum(p.label for p in pairs)
    n_tie = sum(p.label_origin == "tie_assigned" for p in pairs)
    print(f"annotators: {corpus_mod.annotator_count(records)}  pairs: {len(pairs)}  relevant: {n_rel}  irrelevant: {len(pairs) - n_rel}  tie-assigned: {n_tie}")
    print(f"fleiss kappa: {kappa:.3f} ({corpus_mod.interpret_kappa(kappa)})")
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _run_config(args)
    if args.corpus:
        cfg.corpus = [Path(p) for p in args.corpus]
    if not cfg.corpus:
        raise ConfigError("no corpus files given")
    _, tokenized = _load_documents(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    out_path = cfg.out / "tokenized.jsonl"
    with out_path.open("w", encoding="utf-8") as fh:
        for doc_id in sorted(tokenized):
            fh.write(json.dumps(tokenized[doc_id].to_dict(), ensure_ascii=False) + "\n")
    print(f"wrote {len(tokenized)} documents to {out_path}")
    return EXIT_OK


def _evaluate_models(args, default_all: bool) -> int:
    cfg = _run_config(args)
    cfg.validate()
    models = _selected_models(args, cfg, default_all)
    raw, tokenized = _load_documents(cfg)
    pairs = _labeled_pairs(cfg, raw)
    split = corpus_mod.split_dataset(pairs, cfg.test_fraction, cfg.seed)
    scorer = PairScorer(tokenized, cfg.summarizer, cfg.scoring, cfg.pc_removal)
    unknown = {m.embedding for m in models} - set(cfg.embeddings)
    if unknown:
        raise ConfigError(f"no embedding configured for {sorted(unknown)}")
    stores = {name: src for name, src in cfg.embeddings.items() if name in {m.embedding for m in models}}
    reports = run_grid(split.train, split.test, scorer, stores, models, threads=getattr(args, "threads", None))
    paths = write_reports(cfg.out, reports)
    _write_calibration(cfg.out, reports, cfg)

    counts = split.counts()
    print(f"train: {counts['train'][1]} relevant / {counts['train'][0]} irrelevant; test: {counts['test'][1]} / {counts['test'][0]}")
    for r in reports:
        if r.ok:
            print(f"{r.config.slug:40s} cutoff={r.cutoff:9.4f} train_J={r.train_J:.3f} test TPR={r.test_TPR:.3f} FPR={r.test_FPR:.3f} J={r.test_J:.3f}")
        else:
            print(f"{r.config.slug:40s} FAILED: {r.error}")
    print(f"wrote {paths['report']}")
    return EXIT_OK if any(r.ok for r in reports) else EXIT_DATA


def cmd_evaluate(args) -> int:
    return _evaluate_models(args, default_all=False)


def cmd_grid(args) -> int:
    return _evaluate_models(args, default_all=True)


def cmd_match(args) -> int:
    cfg = _run_config(args)
    if args.calibration:
        cfg.calibration = Path(args.calibration)
    models = _selected_models(args, cfg, default_all=False)
    if len(models) != 1:
        raise ConfigError("match needs exactly one model")
    model = models[0]
    if model.embedding not in cfg.embeddings:
        raise ConfigError(f"no embedding configured for {model.embedding!r}")
    if not cfg.corpus:
        raise ConfigError("no corpus files configured")

    cutoff = args.cutoff
    if cutoff is None:
        cal_path = cfg.calibration or cfg.out / "calibration.json"
        if not cal_path.exists():
            raise ConfigError(f"no calibration found at {cal_path}; run 'infomatch evaluate' first or pass --cutoff")
        cutoffs = json.loads(cal_path.read_text(encoding="utf-8")).get("cutoffs", {})
        if model.slug not in cutoffs:
            raise ConfigError(f"{cal_path} has no cutoff for {model.slug}; run 'infomatch evaluate' for this model first")
        cutoff = float(cutoffs[model.slug])

    raw, tokenized = _load_documents(cfg)
    news = raw.get(args.news_id)
    if news is None or news.source != "news":
        raise DataError(f"unknown news article id {args.news_id!r}")
    if args.news_id not in tokenized:
        raise DataError(f"news article {args.news_id!r} has no tokens after preprocessing")
    src = cfg.embeddings[model.embedding]
    store = load_vectors(src.path, src.format, name=model.embedding)
    scorer = PairScorer(tokenized, cfg.summarizer, cfg.scoring, cfg.pc_removal)

    results = []
    for gid in sorted(d for d, doc in raw.items() if doc.source == "guideline" and d in tokenized):
        try:
            score = scorer.score(args.news_id, gid, model.summarizer, model.metric, store)
        except DataError as exc:
            logger.info("skipping guideline %s: %s", gid, exc)
            continue
        if score >= cutoff:
            results.append((score, gid))
    results.sort(key=lambda t: (-t[0], t[1]))

    if args.json:
        print(json.dumps({"news_id": args.news_id, "model": model.slug, "cutoff": cutoff,
                          "matches": [{"guideline_id": g, "score": s} for s, g in results]}, indent=2))
    elif not results:
        print(f"no guideline reached the cutoff {cutoff:.4f} for {args.news_id}", file=sys.stderr)
    else:
        for rank, (score, gid) in enumerate(results, start=1):
            print(f"{rank}\t{gid}\t{score:.6f}")
    return EXIT_OK


COMMANDS = {
    "annotate": cmd_annotate,
    "preprocess": cmd_preprocess,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "match": cmd_match,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
