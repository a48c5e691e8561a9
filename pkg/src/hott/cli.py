"""Command-line pipeline: ingest, fit-lda, topic-costs, dist, knn, mantel, bounds, bench."""
import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from ._container import ContainerError
from .corpus import Corpus, CorpusError, Vocabulary, build_corpus, build_vocabulary, read_labeled_text, split_corpus
from .distances import DEFAULT_DOC_TRUNCATION, DEFAULT_TOPIC_TRUNCATION, DistanceError, DistanceMatrix, TopicCostMatrix, topic_cost_matrix
from .embeddings import EmbeddingError, load_embeddings
from .evaluation import EvaluationError, benchmark_throughput, check_bounds, frobenius_diff, knn_corpora, mantel
from .pairwise import METRICS, TOPIC_METRICS, WORD_METRICS, DocumentDistance, Metric
from .topics import DEFAULT_BETA, DEFAULT_INFER_ITERATIONS, DEFAULT_ITERATIONS, DEFAULT_NUM_TOPICS, TopicModel, TopicModelError, default_alpha, fit_lda
from .transport import TransportError

# options that never change artifact contents
_EXECUTION_ONLY = {"func", "workers", "out", "csv", "tsv", "vocab_out", "out_dir"}


class CLIError(Exception):
    pass


def _file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_config(args):
    """Everything needed to re-run the producing command, minus output paths and workers."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _EXECUTION_ONLY}
    cfg["version"] = __version__
    inputs = {}
    for key in ("input", "corpus", "train", "test", "model", "embeddings", "topic_costs", "a", "b"):
        path = getattr(args, key, None)
        if path:
            inputs[key] = _file_digest(path)
    cfg["input_sha256"] = inputs
    return cfg


def _emit(lines, out=None):
    text = "".join(f"{k}={v}\n" for k, v in lines)
    sys.stdout.write(text)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _require(args, attr, flag, why):
    if not getattr(args, attr, None):
        raise CLIError(f"{why} requires {flag}")
    path = getattr(args, attr)
    if not os.path.exists(path):
        raise CLIError(f"{flag} {path}: file not found")
    return path


def parse_ks(tokens):
    """Parse k specifications like ``1..19 odd``, ``1,3,5`` or ``7``."""
    ks = set()
    parity = None
    for tok in tokens:
        for part in tok.split(","):
            part = part.strip().lower()
            if not part:
                continue
            if part in ("odd", "even"):
                parity = part
            elif ".." in part:
                lo, hi = part.split("..", 1)
                ks.update(range(int(lo), int(hi) + 1))
            else:
                ks.add(int(part))
    if parity == "odd":
        ks = {k for k in ks if k % 2 == 1}
    elif parity == "even":
        ks = {k for k in ks if k % 2 == 0}
    if not ks or min(ks) < 1:
        raise CLIError(f"invalid k specification: {' '.join(tokens)}")
    return sorted(ks)


# ------------------------------------------------------------------- commands


def cmd_ingest(args):
    docs = read_labeled_text(args.input, lowercase=not args.no_lowercase)
    vocab = build_vocabulary(docs, args.min_doc_freq, args.max_vocab)
    corpus = build_corpus(docs, vocab, skip_empty=args.drop_empty)
    corpus.save(args.out)
    if args.vocab_out:
        vocab.save(args.vocab_out)
    _emit([("documents", len(corpus)), ("vocabulary", vocab.size),
           ("classes", len(corpus.class_set)), ("digest", corpus.digest())])


def cmd_fit_lda(args):
    corpus = Corpus.load(args.corpus)
    alpha = default_alpha(args.num_topics) if args.alpha is None else args.alpha
    model = fit_lda(corpus, args.num_topics, alpha, args.beta, args.iterations, args.seed)
    model = dataclasses.replace(model, extra=run_config(args))
    model.save(args.out)
    _emit([("num_topics", model.num_topics), ("alpha", alpha), ("beta", args.beta),
           ("iterations", args.iterations), ("seed", args.seed)])


def _truncation(value):
    if str(value).lower() in ("none", "full", "0"):
        return None
    return int(value)


def cmd_topic_costs(args):
    model = TopicModel.load(args.model)
    vocab = Vocabulary.from_words(model.vocabulary)
    table = load_embeddings(args.embeddings, vocab)
    costs = topic_cost_matrix(model, table, _truncation(args.truncation_k), args.ground_power)
    costs = TopicCostMatrix(costs.costs, costs.truncation_k, costs.ground_power,
                            costs.model_digest, run_config(args))
    costs.save(args.out)
    _emit([("num_topics", costs.num_topics), ("truncation_k", costs.truncation_k),
           ("ground_power", costs.ground_power), ("embedding_coverage", table.coverage)])


def _resources(args, corpus, metric):
    """Load embeddings / model / topic costs that ``metric`` needs, with actionable errors."""
    table = model = costs = None
    what = f"metric {metric.name!r}"
    if metric.name in WORD_METRICS:
        table = load_embeddings(_require(args, "embeddings", "--embeddings", what), corpus.vocabulary)
    if metric.name in TOPIC_METRICS + ("lda",):
        model = TopicModel.load(_require(args, "model", "--model (run `fit-lda` first)", what))
        if tuple(model.vocabulary) != corpus.vocabulary.words:
            raise CLIError("--model was fitted on a different vocabulary than --corpus")
    if metric.name in TOPIC_METRICS:
        costs = TopicCostMatrix.load(
            _require(args, "topic_costs", "--topic-costs (run `topic-costs` first)", what))
    return table, model, costs


def _metric(args):
    lsi_dim = args.lsi_dim if args.lsi_dim is not None else DEFAULT_NUM_TOPICS
    return Metric(args.metric, args.ground_power, args.doc_truncation, lsi_dim)


def cmd_dist(args):
    corpus = Corpus.load(args.corpus)
    metric = _metric(args)
    table, model, costs = _resources(args, corpus, metric)
    est = DocumentDistance(metric, table, model, costs, args.infer_iterations, args.seed, args.workers)
    dm = est.fit(corpus).pairwise(run_config(args))
    dm.save(args.out)
    if args.csv:
        dm.to_csv(args.csv)
    t = dm.timing
    _emit([("metric", metric.name), ("n", dm.n), ("pairs", t["pairs"]),
           ("seconds", f"{t['seconds']:.6f}"), ("pairs_per_second", f"{t['pairs_per_second']:.3f}"),
           ("workers", args.workers)])


def cmd_knn(args):
    if args.train and args.test:
        train, test = Corpus.load(args.train), Corpus.load(args.test)
        if train.vocabulary.words != test.vocabulary.words:
            raise CLIError("--train and --test use different vocabularies")
    elif args.corpus:
        train, test = split_corpus(Corpus.load(args.corpus), args.train_fraction, args.split,
                                   args.split_seed)
    else:
        raise CLIError("knn requires --train and --test, or --corpus with --train-fraction")
    ks = parse_ks(args.k)
    metric = _metric(args)
    table, model, costs = _resources(args, train, metric)
    est = DocumentDistance(metric, table, model, costs, args.infer_iterations, args.seed, args.workers)
    report = knn_corpora(train, test, est, ks)
    report.config = run_config(args)
    text = report.to_text()
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.tsv:
        with open(args.tsv, "w", encoding="utf-8") as fh:
            fh.write(report.to_tsv())


def cmd_mantel(args):
    a, b = DistanceMatrix.load(args.a), DistanceMatrix.load(args.b)
    if a.ids != b.ids:
        raise CLIError("distance matrices cover different documents")
    res = mantel(a, b, args.permutations, args.seed)
    _emit([("metric_a", a.metric["name"]), ("metric_b", b.metric["name"]), ("n", a.n),
           ("mantel_r", repr(res.r)), ("p_value", repr(res.p_value)),
           ("permutations", res.permutations), ("seed", args.seed),
           ("frobenius", repr(frobenius_diff(a, b)))], args.out)


def cmd_bounds(args):
    corpus = Corpus.load(args.corpus)
    model = TopicModel.load(_require(args, "model", "--model", "bounds"))
    if tuple(model.vocabulary) != corpus.vocabulary.words:
        raise CLIError("--model was fitted on a different vocabulary than --corpus")
    table = load_embeddings(_require(args, "embeddings", "--embeddings", "bounds"), corpus.vocabulary)
    props = DocumentDistance("hoftt", table, model, None, args.infer_iterations,
                             args.seed).proportions(corpus)
    costs = topic_cost_matrix(model, table, truncation_k=None, ground_power=1)
    rng = np.random.default_rng(args.seed)
    n = len(corpus)
    if n < 2:
        raise CLIError("bounds needs at least two documents")
    rows = []
    for _ in range(args.pairs):
        i = int(rng.integers(n))
        j = int((i + rng.integers(1, n)) % n)
        rep = check_bounds(corpus.documents[i], corpus.documents[j], model, table,
                           props[i], props[j], costs)
        rows.append((corpus.ids[i], corpus.ids[j], rep.as_row()))
    cols = list(rows[0][2])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("id_1\tid_2\t" + "\t".join(cols) + "\n")
            for a, b, row in rows:
                fh.write(f"{a}\t{b}\t" + "\t".join(repr(float(row[c])) for c in cols) + "\n")
    worst = {c: max(r[2][c] for r in rows) for c in cols if c.startswith("residual_")}
    _emit([("pairs", len(rows))] + [(f"max_{c}", repr(v)) for c, v in worst.items()]
          + [("all_hold", all(v <= 1e-6 for v in worst.values()))])


def cmd_bench(args):
    corpus = Corpus.load(args.corpus)
    metric = _metric(args)
    table, model, costs = _resources(args, corpus, metric)
    est = DocumentDistance(metric, table, model, costs, args.infer_iterations, args.seed, 1)
    rep = benchmark_throughput(corpus, est, args.pairs, args.warmup, args.seed)
    _emit([("metric", json.dumps(rep["metric"], sort_keys=True)), ("pairs", rep["pairs"]),
           ("warmup", rep["warmup"]), ("seconds", f"{rep['seconds']:.6f}"),
           ("pairs_per_second", f"{rep['pairs_per_second']:.3f}"), ("workers", 1),
           ("machine", rep["machine"])], args.out)


def cmd_synth(args):
    from .datasets import make_long_corpus, make_topic_corpus, write_corpus_text
    from .embeddings import save_embeddings

    if args.kind == "topic":
        corpus, table = make_topic_corpus(n_docs=args.n_docs, n_classes=args.n_classes, seed=args.seed)
    else:
        corpus, table = make_long_corpus(n_docs=args.n_docs, n_classes=args.n_classes, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    write_corpus_text(os.path.join(args.out_dir, "corpus.tsv"), corpus)
    save_embeddings(os.path.join(args.out_dir, "vectors.txt"), table)
    _emit([("documents", len(corpus)), ("vocabulary", corpus.vocabulary.size),
           ("out_dir", args.out_dir)])


# --------------------------------------------------------------------- parser


def _metric_options(p, needs_out=True):
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--embeddings", help="word vectors, 'token v1 ... vD' per line (gzip ok)")
    p.add_argument("--model", help="topic model from fit-lda")
    p.add_argument("--topic-costs", help="topic cost matrix from topic-costs")
    p.add_argument("--ground-power", type=int, choices=(1, 2), default=1)
    p.add_argument("--doc-truncation", type=int, default=DEFAULT_DOC_TRUNCATION,
                   help="words kept per document for wmd-t")
    p.add_argument("--lsi-dim", type=int, default=None, help=f"LSI dimension (default {DEFAULT_NUM_TOPICS})")
    p.add_argument("--infer-iterations", type=int, default=DEFAULT_INFER_ITERATIONS)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="hott", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="labeled text -> corpus file")
    p.add_argument("--input", required=True, help="UTF-8 'label<TAB>text' lines")
    p.add_argument("--out", required=True)
    p.add_argument("--min-doc-freq", type=int, default=1)
    p.add_argument("--max-vocab", type=int, default=None)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--drop-empty", action="store_true", help="skip documents with no kept token")
    p.add_argument("--vocab-out", help="write the vocabulary, one token per line")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit-lda", help="corpus -> topic model (collapsed Gibbs)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--num-topics", type=int, default=DEFAULT_NUM_TOPICS)
    p.add_argument("--alpha", type=float, default=None, help="default 50/num_topics")
    p.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit_lda)

    p = sub.add_parser("topic-costs", help="model + embeddings -> topic cost matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truncation-k", default=str(DEFAULT_TOPIC_TRUNCATION),
                   help="words kept per topic; 'none' keeps all")
    p.add_argument("--ground-power", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_topic_costs)

    p = sub.add_parser("dist", help="corpus + metric -> distance matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also export the matrix as CSV")
    p.add_argument("--workers", type=int, default=1)
    _metric_options(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("knn", help="k-NN classification error")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--corpus", help="single corpus to split")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--split", choices=("in-order", "seeded-shuffle"), default="in-order")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--k", nargs="+", default=["1..19", "odd"], help="e.g. '1..19 odd' or '1,3,5'")
    p.add_argument("--out", help="key=value report")
    p.add_argument("--tsv", help="tabular k/error export")
    p.add_argument("--workers", type=int, default=1)
    _metric_options(p)
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("mantel", help="Mantel test and Frobenius difference of two matrices")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mantel)

    p = sub.add_parser("bounds", help="check the RWMD/WMD/HOFTT inequality chain on sampled pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--infer-iterations", type=int, default=DEFAULT_INFER_ITERATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="per-pair TSV")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench", help="single-worker pairs/second")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--out")
    _metric_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic corpus.tsv and vectors.txt")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=("topic", "long"), default="topic")
    p.add_argument("--n-docs", type=int, default=120)
    p.add_argument("--n-classes", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


_USER_ERRORS = (CLIError, CorpusError, EmbeddingError, DistanceError, TopicModelError,
                TransportError, EvaluationError, ContainerError, OSError)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except _USER_ERRORS as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"hott {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
