import json
import shutil

import pytest

from infomatch import cli
from infomatch.config import config_from_dict, load_config
from infomatch.corpus import Document, load_corpus, write_corpus
from infomatch.errors import ConfigError
from infomatch.synthetic import planted_corpus, write_fixture


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    write_fixture(d, n_pairs=24, seed=3)
    return d


@pytest.fixture
def work(fixture_dir, tmp_path):
    d = tmp_path / "fx"
    shutil.copytree(fixture_dir, d)
    return d


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_annotate(work, capsys):
    assert run("annotate", "--config", work / "config.json") == 0
    out = capsys.readouterr().out
    assert "fleiss kappa:" in out
    assert any(band in out for band in ("slight", "fair", "moderate", "substantial", "perfect", "no agreement"))
    first = (work / "out" / "pairs.csv").read_bytes()
    assert first.startswith(b"news_id,guideline_id,label")
    assert run("annotate", "--config", work / "config.json") == 0
    assert (work / "out" / "pairs.csv").read_bytes() == first


def test_annotate_odd_annotators(work, capsys):
    votes = work / "odd.csv"
    votes.write_text("news_id,guideline_id,votes_relevant,votes_irrelevant\nn1,g1,5,2\nn2,g1,1,6\n", encoding="utf-8")
    assert run("annotate", votes, "--seed", 1, "--out", work / "o") == 2
    assert "even number" in capsys.readouterr().err


def test_annotate_malformed_csv(work, capsys):
    votes = work / "bad.csv"
    votes.write_text("news_id,guideline_id,votes_relevant,votes_irrelevant\nn1,g1,x,2\n", encoding="utf-8")
    assert run("annotate", votes, "--seed", 1, "--out", work / "o") == 2
    assert "bad.csv:2" in capsys.readouterr().err


def test_annotate_needs_seed(work):
    assert run("annotate", work / "votes.csv", "--out", work / "o") == 1


def test_preprocess_command(work):
    assert run("preprocess", "--config", work / "config.json", "--out", work / "pp") == 0
    lines = (work / "pp" / "tokenized.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 24 + 12
    row = json.loads(lines[0])
    assert set(row) == {"id", "sentences"}
    assert {"index", "text", "tokens", "surface"} <= set(row["sentences"][0])


def test_grid_only_filter_creates_out_dir(work):
    out = work / "deep" / "new"
    assert run("grid", "--config", work / "config.json", "--only", "w2v,lexrank,wmd", "--out", out) == 0
    reports = json.loads((out / "report.json").read_text())
    assert len(reports) == 1
    assert reports[0]["slug"] == "word2vec-lexrank-neg_wmd"
    assert (out / "roc_word2vec-lexrank-neg_wmd.csv").exists()
    assert "word2vec-lexrank-neg_wmd" in json.loads((out / "calibration.json").read_text())["cutoffs"]


def test_grid_full_is_deterministic(work):
    cfg = work / "config.json"
    assert run("grid", "--config", cfg, "--out", work / "a") == 0
    assert run("grid", "--config", cfg, "--out", work / "b") == 0
    names = sorted(p.name for p in (work / "a").iterdir())
    assert len(json.loads((work / "a" / "report.json").read_text())) == 36
    for name in names:
        if name != "runtime.json":
            assert (work / "a" / name).read_bytes() == (work / "b" / name).read_bytes(), name


def test_metric_and_k_flags(work):
    assert run("evaluate", "--config", work / "config.json", "--metric", "cosine", "--k", 2, "--out", work / "e") == 0
    cal = json.loads((work / "e" / "calibration.json").read_text())
    assert list(cal["cutoffs"]) == ["word2vec-lexrank-cosine"]
    assert cal["summarizer_k"] == 2


def test_match_requires_calibration(work, capsys):
    assert run("match", "n000", "--config", work / "config.json", "--out", work / "empty") == 1
    assert "evaluate" in capsys.readouterr().err


def test_match_after_evaluate_ranks_planted_topic(work, capsys):
    cfg = work / "config.json"
    assert run("evaluate", "--config", cfg) == 0
    capsys.readouterr()
    data = planted_corpus(n_pairs=24, seed=3)
    assert run("match", "n000", "--config", cfg, "--json") == 0
    result = json.loads(capsys.readouterr().out)
    scores = [m["score"] for m in result["matches"]]
    assert scores == sorted(scores, reverse=True)
    assert all(s >= result["cutoff"] for s in scores)
    assert data.topics[result["matches"][0]["guideline_id"]] == data.topics["n000"]


def test_match_cutoff_above_everything(work, capsys):
    assert run("match", "n000", "--config", work / "config.json", "--cutoff", 1.0) == 0
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "no guideline" in captured.err


def test_match_identical_article(work, capsys):
    docs = load_corpus(work / "corpus.jsonl")
    g = next(d for d in docs if d.id == "g000")
    write_corpus(work / "corpus.jsonl", docs + [Document("copy", g.text, "news")])
    assert run("match", "copy", "--config", work / "config.json", "--cutoff", -1e9, "--json") == 0
    matches = json.loads(capsys.readouterr().out)["matches"]
    assert matches[0] == {"guideline_id": "g000", "score": 0.0}
    assert all(m["score"] < 0 for m in matches[1:])


def test_match_unknown_id(work, capsys):
    assert run("match", "nope", "--config", work / "config.json", "--cutoff", 0) == 2
    assert "nope" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert run("bogus") == 1
    assert run("grid", "--seed", "x") == 1
    assert run() == 1
    assert run("--help") == 0


def test_config_errors(work, capsys):
    assert run("grid", "--config", work / "missing.json") == 1
    bad = work / "bad.json"
    bad.write_text(json.dumps({"corpus": "corpus.jsonl", "seeed": 1}), encoding="utf-8")
    assert run("grid", "--config", bad) == 1
    assert "seeed" in capsys.readouterr().err
    noseed = work / "noseed.json"
    cfg = json.loads((work / "config.json").read_text())
    del cfg["seed"]
    noseed.write_text(json.dumps(cfg), encoding="utf-8")
    assert run("evaluate", "--config", noseed) == 1
    assert run("evaluate", "--config", noseed, "--seed", 0, "--out", work / "s") == 0


def test_internal_error_exit_code(work, monkeypatch):
    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "preprocess", boom)
    assert run("preprocess", "--config", work / "config.json") == 3


def test_config_relative_paths_and_nested_embedding(tmp_path):
    cfg = config_from_dict(
        {
            "corpus": ["c.jsonl"],
            "embedding": {"name": "glove", "path": "g.txt", "format": "text", "sif_a": 0.01, "pc_removal": True},
            "metric": "cosine",
            "wmd": {"support_cap": 64},
            "seed": 7,
        },
        tmp_path,
    )
    assert cfg.corpus == [tmp_path / "c.jsonl"]
    assert cfg.embedding == "glove"
    assert cfg.embeddings["glove"].path == str(tmp_path / "g.txt")
    assert (cfg.sif_a, cfg.pc_removal, cfg.support_cap, cfg.metric) == (0.01, True, 64, "cosine")
    with pytest.raises(ConfigError):
        config_from_dict({"metric": "jaccard"})
    with pytest.raises(ConfigError):
        config_from_dict({"summarizer": {"kind": "bert"}})
    with pytest.raises(ConfigError):
        config_from_dict({"embeddings": {"x": {"path": "p", "format": "hdf5"}}})


def test_validate_reports_missing_files(tmp_path):
    cfg = config_from_dict({"corpus": ["nope.jsonl"], "votes": "v.csv", "embeddings": {"word2vec": "w.txt"}, "seed": 1}, tmp_path)
    with pytest.raises(ConfigError) as info:
        cfg.validate()
    assert "nope.jsonl" in str(info.value)
    assert load_config(None).seed is None
