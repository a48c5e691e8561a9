import subprocess
import sys

import pytest

from hott.cli import main, parse_ks
from hott.corpus import Corpus
from hott.distances import DistanceMatrix, TopicCostMatrix
from hott.topics import TopicModel


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out-dir", str(d), "--n-docs", "24", "--seed", "1"]) == 0
    assert main(["ingest", "--input", str(d / "corpus.tsv"), "--out", str(d / "corpus.hott"),
                 "--vocab-out", str(d / "vocab.txt")]) == 0
    assert main(["fit-lda", "--corpus", str(d / "corpus.hott"), "--out", str(d / "model.lda"),
                 "--num-topics", "5", "--iterations", "50"]) == 0
    assert main(["topic-costs", "--model", str(d / "model.lda"), "--embeddings",
                 str(d / "vectors.txt"), "--out", str(d / "costs.bin")]) == 0
    return d


def test_parse_ks():
    assert parse_ks(["1..19", "odd"]) == list(range(1, 20, 2))
    assert parse_ks(["1,3,5"]) == [1, 3, 5]
    assert parse_ks(["2..6"]) == [2, 3, 4, 5, 6]


def test_artifacts_record_config(workdir):
    corpus = Corpus.load(workdir / "corpus.hott")
    assert len(corpus) == 24
    assert (workdir / "vocab.txt").read_text().splitlines() == list(corpus.vocabulary.words)
    model = TopicModel.load(workdir / "model.lda")
    assert model.extra["num_topics"] == 5 and model.extra["seed"] == 0
    assert "corpus" in model.extra["input_sha256"]
    costs = TopicCostMatrix.load(workdir / "costs.bin")
    assert costs.truncation_k == 20 and costs.model_digest == model.digest()


def test_dist_and_mantel(workdir, capsys):
    d = workdir
    for metric, extra in (("hott", ["--model", str(d / "model.lda"), "--topic-costs",
                                    str(d / "costs.bin")]),
                          ("rwmd", ["--embeddings", str(d / "vectors.txt")])):
        assert main(["dist", "--corpus", str(d / "corpus.hott"), "--metric", metric, *extra,
                     "--out", str(d / f"{metric}.dist")]) == 0
    dm = DistanceMatrix.load(d / "hott.dist")
    assert dm.config["metric"] == "hott" and dm.config["seed"] == 0
    assert "workers" not in dm.config
    capsys.readouterr()
    assert main(["mantel", "--a", str(d / "hott.dist"), "--b", str(d / "rwmd.dist"),
                 "--permutations", "99", "--out", str(d / "mantel.txt")]) == 0
    out = capsys.readouterr().out
    assert "mantel_r=" in out and "p_value=" in out and "frobenius=" in out
    assert (d / "mantel.txt").read_text() == out


def test_knn_sweep(workdir, capsys):
    d = workdir
    assert main(["knn", "--corpus", str(d / "corpus.hott"), "--metric", "hott",
                 "--model", str(d / "model.lda"), "--topic-costs", str(d / "costs.bin"),
                 "--k", "1..19", "odd", "--tsv", str(d / "knn.tsv")]) == 0
    out = capsys.readouterr().out
    # 24 docs -> 20 train: all of 1, 3, ..., 19 are valid
    assert "error_k19=" in out and "best_k=" in out
    assert len((d / "knn.tsv").read_text().splitlines()) == 11


def test_bounds_and_bench(workdir, capsys):
    d = workdir
    assert main(["bounds", "--corpus", str(d / "corpus.hott"), "--model", str(d / "model.lda"),
                 "--embeddings", str(d / "vectors.txt"), "--pairs", "10",
                 "--out", str(d / "bounds.tsv")]) == 0
    out = capsys.readouterr().out
    assert "all_hold=True" in out
    assert len((d / "bounds.tsv").read_text().splitlines()) == 11
    assert main(["bench", "--corpus", str(d / "corpus.hott"), "--metric", "nbow",
                 "--pairs", "20", "--warmup", "2"]) == 0
    assert "pairs_per_second=" in capsys.readouterr().out


def test_missing_prerequisites(workdir, capsys):
    d = workdir
    assert main(["dist", "--corpus", str(d / "corpus.hott"), "--metric", "hott",
                 "--model", str(d / "model.lda"), "--out", str(d / "x.dist")]) == 1
    err = capsys.readouterr().err
    assert "--topic-costs" in err and "topic-costs" in err and err.count("\n") == 1
    assert main(["dist", "--corpus", str(d / "corpus.hott"), "--metric", "wmd",
                 "--embeddings", str(d / "missing.txt"), "--out", str(d / "x.dist")]) == 1
    assert "file not found" in capsys.readouterr().err
    assert main(["knn", "--metric", "nbow"]) == 1


def test_unknown_flag_exits_nonzero():
    proc = subprocess.run([sys.executable, "-m", "hott.cli", "dist", "--bogus"],
                          capture_output=True, text=True)
    assert proc.returncode != 0
    assert "unrecognized arguments" in proc.stderr or "required" in proc.stderr
