"""Acceptance suite: one test per criterion, each reported as PASS/FAIL in the summary.

Run alone with ``pytest tests/test_acceptance.py``; the criterion table is
printed after the test results.
"""
import itertools
import os
import shutil
import time

import numpy as np
import pytest

from hott.cli import main
from hott.corpus import DocumentDistribution, Vocabulary, split_corpus
from hott.datasets import make_long_corpus, make_topic_corpus
from hott.distances import hott, rwmd, topic_cost_matrix, wmd
from hott.embeddings import EmbeddingTable, euclidean
from hott.evaluation import benchmark_throughput, check_bounds, knn_corpora, mantel
from hott.pairwise import DocumentDistance, pairwise_matrix
from hott.topics import TopicModel, fit_lda
from hott.transport import (
    MARGINAL_TOL,
    PLAN_AUDIT,
    _hausdorff_matrix,
    brute_force_reference,
    solve_exact,
)

criterion = pytest.mark.criterion


@criterion(1, "exact solver matches brute-force oracle (500 instances, n,m <= 4)")
def test_solver_matches_oracle(detail):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for trial in range(500):
        n, m = (int(x) for x in rng.integers(1, 5, size=2))
        if trial % 3 == 0:
            m = n
        # integer costs on every other instance exercise degenerate ties
        if trial % 2:
            C = rng.integers(0, 4, size=(n, m)).astype(float)
        else:
            C = rng.random((n, m))
        p, q = np.full(n, 1.0 / n), np.full(m, 1.0 / m)
        worst = max(worst, abs(solve_exact(p, q, C).cost - brute_force_reference(p, q, C)))
    elapsed = time.perf_counter() - start
    detail(f"max |diff| {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-9
    assert elapsed < 5.0


@criterion(2, "every transport plan satisfies its marginals within 1e-8")
def test_marginal_feasibility(detail):
    rng = np.random.default_rng(2)
    worst = 0.0
    for trial in range(300):
        n, m = (int(x) for x in rng.integers(1, 30, size=2))
        p = rng.random(n) ** 3
        q = rng.random(m) ** 3
        p[rng.random(n) < 0.2] = 0.0
        q[rng.random(m) < 0.2] = 0.0
        p[0] += 1e-3
        q[-1] += 1e-3
        p, q = p / p.sum(), q / q.sum()
        C = rng.integers(0, 3, size=(n, m)).astype(float) if trial % 2 else rng.random((n, m))
        plan = solve_exact(p, q, C).plan
        worst = max(worst, np.abs(plan.sum(1) - p).max(), np.abs(plan.sum(0) - q).max())
        assert plan.min() >= 0.0
    detail(f"this sweep {worst:.2e}; {PLAN_AUDIT['plans']} plans audited in-process, "
           f"max {PLAN_AUDIT['max_violation']:.2e}")
    assert worst <= MARGINAL_TOL
    # the session hook re-checks the audit once the whole suite has run
    assert PLAN_AUDIT["max_violation"] <= MARGINAL_TOL


@criterion(3, "rwmd <= wmd and rwmd <= Hausdorff on 1000 pairs")
def test_lower_bound_chain(detail):
    corpus, table = make_topic_corpus(n_docs=120, seed=3)
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst_w = worst_h = -np.inf
    for _ in range(1000):
        i, j = rng.choice(len(corpus), size=2, replace=False)
        d1, d2 = corpus.documents[i], corpus.documents[j]
        r = rwmd(d1, d2, table)
        w = wmd(d1, d2, table)
        D = euclidean(table.vectors[d1.support], table.vectors[d2.support])
        h = _hausdorff_matrix(D)
        worst_w = max(worst_w, r - w)
        worst_h = max(worst_h, r - h)
    elapsed = time.perf_counter() - start
    detail(f"max rwmd-wmd {worst_w:.2e}, max rwmd-hausdorff {worst_h:.2e}, {elapsed:.1f}s")
    assert worst_w <= 1e-9
    assert worst_h <= 1e-9
    assert elapsed < 30.0


@criterion(4, "upper-bound chain with untruncated 10-topic model (200 pairs)")
def test_upper_bound_chain(detail):
    corpus, table = make_topic_corpus(n_docs=80, seed=4)
    model = fit_lda(corpus, num_topics=10, iterations=200, seed=0)
    costs = topic_cost_matrix(model, table, truncation_k=None)
    rng = np.random.default_rng(4)
    worst = {"c": -np.inf, "d": -np.inf}
    for _ in range(200):
        i, j = rng.choice(len(corpus), size=2, replace=False)
        rep = check_bounds(corpus.documents[i], corpus.documents[j], model, table,
                           model.doc_topic[i], model.doc_topic[j], costs)
        for key in worst:
            worst[key] = max(worst[key], rep.residuals[key])
    detail(f"max residual mixture-W1 vs hoftt {worst['c']:.2e}, wmd vs hoftt+KL {worst['d']:.2e}")
    assert worst["c"] <= 1e-6
    assert worst["d"] <= 1e-6


def _singleton_model(corpus):
    V = corpus.vocabulary.size
    props = np.vstack([d.dense(V) for d in corpus.documents])
    return TopicModel(np.eye(V), props, alpha=0.0, beta=0.0, seed=0,
                      vocabulary=corpus.vocabulary.words)


@criterion(5, "hott equals wmd with |T| = |V| singleton topics (30 documents)")
def test_singleton_topics_reduce_to_wmd(detail):
    # 30 words and 20 tokens per document: every word mass is >= 1/20 > 1/(|T|+1),
    # so proportion truncation keeps every topic
    corpus, table = make_topic_corpus(n_docs=30, n_classes=2, words_per_group=15,
                                      doc_length=20, seed=5)
    model = _singleton_model(corpus)
    costs = topic_cost_matrix(model, table)
    worst = 0.0
    for i, j in itertools.combinations(range(len(corpus)), 2):
        w = wmd(corpus.documents[i], corpus.documents[j], table)
        for truncate in (True, False):
            h = hott(model.doc_topic[i], model.doc_topic[j], costs, truncate=truncate)
            worst = max(worst, abs(h - w))
    detail(f"max |hott - wmd| {worst:.2e} over 435 pairs")
    assert worst <= 1e-9


@criterion(6, "rwmd is 0 while wmd > 0.1 diam on identical supports")
def test_rwmd_failure_mode(detail):
    vocab = Vocabulary.from_words(["alpha", "beta", "gamma"])
    table = EmbeddingTable.from_array(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]]), vocab.words)
    support = np.arange(3)
    d1 = DocumentDistribution.from_counts(support, np.array([18, 1, 1]))
    d2 = DocumentDistribution.from_counts(support, np.array([1, 18, 1]))
    diam = euclidean(table.vectors, table.vectors).max()
    r, w = rwmd(d1, d2, table), wmd(d1, d2, table)
    detail(f"rwmd {r:.3g}, wmd {w:.3g}, diam {diam:.3g}")
    assert r == 0.0
    assert w > 0.1 * diam


@criterion(7, "hott is a metric on 500 proportion triples")
def test_hott_metric_axioms(topic_fixture, detail):
    _, _, _, costs = topic_fixture
    T = costs.num_topics
    rng = np.random.default_rng(7)
    worst_self = worst_sym = worst_tri = 0.0
    for trial in range(500):
        conc = [0.1, 0.5, 2.0][trial % 3]
        a, b, c = rng.dirichlet(np.full(T, conc), size=3)
        ab, ba = hott(a, b, costs), hott(b, a, costs)
        bc, ac = hott(b, c, costs), hott(a, c, costs)
        worst_self = max(worst_self, abs(hott(a, a, costs)))
        worst_sym = max(worst_sym, abs(ab - ba))
        worst_tri = max(worst_tri, ac - (ab + bc))
    detail(f"self {worst_self:.1e}, asymmetry {worst_sym:.1e}, triangle excess {worst_tri:.1e}")
    assert worst_self == 0.0
    assert worst_sym <= 1e-9
    assert worst_tri <= 1e-8


@criterion(8, "LDA recovers planted disjoint topics, deterministic per seed")
def test_lda_recovery(planted, detail):
    corpus, true = planted
    half = true.shape[1] // 2
    start = time.perf_counter()
    model = fit_lda(corpus, num_topics=2, seed=0)
    again = fit_lda(corpus, num_topics=2, seed=0)
    elapsed = time.perf_counter() - start
    on_half = np.stack([model.topic_word[:, :half].sum(1), model.topic_word[:, half:].sum(1)], 1)
    # best matching of learned topics to true halves
    match = max(itertools.permutations(range(2)),
                key=lambda perm: sum(on_half[t, h] for t, h in enumerate(perm)))
    concentration = [on_half[t, h] for t, h in enumerate(match)]
    detail(f"mass on matched half {min(concentration):.4f}, two fits {elapsed:.1f}s")
    assert min(concentration) >= 0.9
    assert np.array_equal(model.topic_word, again.topic_word)
    assert np.array_equal(model.doc_topic, again.doc_topic)
    assert elapsed < 60.0


@criterion(9, "4-class k-NN: hott 1-NN error <= 0.05 and <= nbow error")
def test_knn_sanity(detail):
    # short documents over 60-word groups: same-class documents share few
    # words, which is where topic-level transport should help over nBOW
    corpus, table = make_topic_corpus(n_docs=400, n_classes=4, words_per_group=60,
                                      doc_length=10, purity=0.75, seed=1)
    train, test = split_corpus(corpus, 0.75)
    model = fit_lda(train, num_topics=4, alpha=0.5, iterations=300, seed=0)
    costs = topic_cost_matrix(model, table)
    errors = {}
    for name in ("hott", "nbow"):
        est = DocumentDistance(name, embeddings=table, topic_model=model, topic_costs=costs)
        errors[name] = knn_corpora(train, test, est, [1]).errors[1]
    detail(f"1-NN error hott {errors['hott']:.3f}, nbow {errors['nbow']:.3f}")
    assert errors["hott"] <= 0.05
    assert errors["hott"] <= errors["nbow"]


@criterion(10, "single-worker throughput: hott >= 10x exact wmd on long documents")
def test_throughput_ordering(detail):
    start = time.perf_counter()
    corpus, table = make_long_corpus(n_docs=8, seed=0)
    unique = min(len(d.support) for d in corpus.documents)
    model = fit_lda(corpus, num_topics=10, iterations=100, seed=0)
    costs = topic_cost_matrix(model, table)
    h = benchmark_throughput(corpus, DocumentDistance("hott", topic_model=model, topic_costs=costs),
                             pair_budget=200, warmup=5)
    w = benchmark_throughput(corpus, DocumentDistance("wmd", embeddings=table),
                             pair_budget=3, warmup=1)
    elapsed = time.perf_counter() - start
    ratio = h["pairs_per_second"] / w["pairs_per_second"]
    detail(f">= {unique} unique words/doc; hott {h['pairs_per_second']:.0f}/s, "
           f"wmd {w['pairs_per_second']:.3f}/s, ratio {ratio:.0f}, {elapsed:.0f}s")
    assert unique >= 500
    assert ratio >= 10.0
    assert elapsed < 300.0


@criterion(11, "mantel(D, D) r = 1; hott vs wmd positive with p <= 0.05")
def test_mantel_statistics(topic_fixture, detail):
    corpus, table, model, costs = topic_fixture
    H = pairwise_matrix(corpus, "hott", topic_model=model, topic_costs=costs)
    W = pairwise_matrix(corpus, "wmd", embeddings=table)
    same = mantel(H, H, permutations=99)
    res = mantel(H, W, permutations=999, seed=0)
    detail(f"self r {same.r!r}; hott-wmd r {res.r:.3f}, p {res.p_value:.4f}")
    assert same.r == 1.0
    assert res.r > 0
    assert res.p_value <= 0.05


def _pipeline(workdir, workers):
    def run(*argv):
        assert main(list(argv)) == 0, argv

    run("synth", "--out-dir", workdir, "--n-docs", "30", "--seed", "3")
    corpus = os.path.join(workdir, "corpus.hott")
    model = os.path.join(workdir, "model.lda")
    tcost = os.path.join(workdir, "topics.cost")
    vectors = os.path.join(workdir, "vectors.txt")
    run("ingest", "--input", os.path.join(workdir, "corpus.tsv"), "--out", corpus)
    run("fit-lda", "--corpus", corpus, "--out", model, "--num-topics", "6", "--iterations", "100",
        "--seed", "5")
    run("topic-costs", "--model", model, "--embeddings", vectors, "--out", tcost)
    outputs = {}
    for metric, extra in (("hott", ["--model", model, "--topic-costs", tcost]),
                          ("wmd", ["--embeddings", vectors]),
                          ("lsi", ["--lsi-dim", "5"])):
        out = os.path.join(workdir, f"{metric}.dist")
        run("dist", "--corpus", corpus, "--metric", metric, *extra, "--workers", str(workers),
            "--out", out, "--csv", out + ".csv")
        with open(out, "rb") as fh, open(out + ".csv", "rb") as fc:
            outputs[metric] = (fh.read(), fc.read())
    return outputs


@criterion(12, "CLI reruns give byte-identical distance matrices for any --workers")
def test_cli_determinism(tmp_path, detail):
    workdir = str(tmp_path / "run")
    first = _pipeline(workdir, workers=1)
    shutil.rmtree(workdir)
    second = _pipeline(workdir, workers=1)
    shutil.rmtree(workdir)
    parallel = _pipeline(workdir, workers=2)
    detail(f"{len(first)} metrics x 3 runs, {sum(len(v[0]) for v in first.values())} bytes")
    assert first == second
    assert first == parallel
