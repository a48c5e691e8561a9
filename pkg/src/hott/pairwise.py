"""Metric descriptors and the pairwise distance engine.

:class:`DocumentDistance` follows the scikit-learn transformer protocol:
``fit`` takes a reference corpus and ``transform`` returns distances from
new documents to it, so the output plugs straight into estimators that take
``metric="precomputed"``.
"""
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .baselines import BowVectorizer, vector_distance
from .distances import (
    DEFAULT_DOC_TRUNCATION,
    DistanceError,
    DistanceMatrix,
    _truncate_doc,
    embedded_support,
)
from .embeddings import euclidean
from .topics import (
    DEFAULT_INFER_ITERATIONS,
    document_seed,
    infer_proportions,
    truncate_proportions,
)
from .transport import relaxed_cost, wasserstein

WORD_METRICS = ("wmd", "wmd-t", "rwmd")
TOPIC_METRICS = ("hott", "hoftt")
VECTOR_METRICS = ("nbow", "tfidf", "lsi", "lda", "cosine")
METRICS = WORD_METRICS + TOPIC_METRICS + VECTOR_METRICS


@dataclass(frozen=True)
class Metric:
    name: str
    ground_power: int = 1
    doc_truncation: int = DEFAULT_DOC_TRUNCATION
    lsi_dim: int = 70

    def __post_init__(self):
        if self.name not in METRICS:
            raise DistanceError(f"unknown metric {self.name!r}; expected one of {', '.join(METRICS)}")
        if self.ground_power not in (1, 2):
            raise DistanceError("ground_power must be 1 or 2")

    def descriptor(self):
        """Name plus the parameters that affect this metric's values."""
        d = {"name": self.name}
        if self.name in WORD_METRICS:
            d["ground_power"] = self.ground_power
        if self.name == "wmd-t":
            d["doc_truncation"] = self.doc_truncation
        if self.name == "lsi":
            d["lsi_dim"] = self.lsi_dim
        return d

    @classmethod
    def coerce(cls, metric):
        if isinstance(metric, cls):
            return metric
        if isinstance(metric, str):
            return cls(metric)
        return cls(**metric)


def _pair_value(kind, a, b, ctx):
    if kind == "word":
        D = euclidean(ctx["vectors"][a[0]], ctx["vectors"][b[0]])
        return wasserstein(a[1], b[1], D, ctx["power"])
    if kind == "relaxed":
        D = euclidean(ctx["vectors"][a[0]], ctx["vectors"][b[0]])
        if ctx["power"] == 2:
            return float(np.sqrt(relaxed_cost(a[1], b[1], D * D).value))
        return relaxed_cost(a[1], b[1], D).value
    if kind == "topic":
        return wasserstein(a[1], b[1], ctx["costs"][np.ix_(a[0], b[0])], ctx["power"])
    return vector_distance(a, b, ctx["vector_kind"])


def _rows_block(kind, ctx, rows, left, right, left_ids, right_ids, upper):
    out = []
    for i in rows:
        start = i + 1 if upper else 0
        vals = np.empty(len(right) - start)
        for j in range(start, len(right)):
            try:
                vals[j - start] = _pair_value(kind, left[i], right[j], ctx)
            except ValueError as exc:
                raise DistanceError(f"documents {left_ids[i]!r} and {right_ids[j]!r}: {exc}") from exc
        out.append((i, vals))
    return out


class DocumentDistance(BaseEstimator, TransformerMixin):
    """Distances between documents under one of the supported metrics.

    Parameters
    ----------
    metric : str, dict or Metric
        ``wmd``, ``wmd-t``, ``rwmd``, ``hott``, ``hoftt``, ``nbow``, ``tfidf``,
        ``lsi``, ``lda`` or ``cosine``.
    embeddings : EmbeddingTable, optional
        Needed by the word-level metrics.
    topic_model : TopicModel, optional
        Needed by ``hott``, ``hoftt`` and ``lda``.
    topic_costs : TopicCostMatrix, optional
        Needed by ``hott`` and ``hoftt``.
    infer_iterations : int, default=50
        Fold-in sweeps for documents the topic model was not trained on.
    seed : int, default=0
        Base seed for fold-in; document ``i`` uses ``(seed, i)``.
    n_jobs : int, default=1
        Worker processes; results do not depend on it.
    """

    def __init__(self, metric="hott", embeddings=None, topic_model=None, topic_costs=None,
                 infer_iterations=DEFAULT_INFER_ITERATIONS, seed=0, n_jobs=1):
        self.metric = metric
        self.embeddings = embeddings
        self.topic_model = topic_model
        self.topic_costs = topic_costs
        self.infer_iterations = infer_iterations
        self.seed = seed
        self.n_jobs = n_jobs

    def _check_resources(self, metric):
        need = []
        if metric.name in WORD_METRICS and self.embeddings is None:
            need.append("embeddings")
        if metric.name in TOPIC_METRICS + ("lda",) and self.topic_model is None:
            need.append("topic model")
        if metric.name in TOPIC_METRICS and self.topic_costs is None:
            need.append("topic costs")
        if need:
            raise DistanceError(f"metric {metric.name!r} requires: {', '.join(need)}")
        if metric.name in TOPIC_METRICS:
            digest = self.topic_costs.model_digest
            if digest and digest != self.topic_model.digest():
                raise DistanceError("topic costs were computed from a different topic model")
            if self.topic_costs.num_topics != self.topic_model.num_topics:
                raise DistanceError("topic costs and topic model disagree on the number of topics")

    def proportions(self, corpus):
        """Topic proportions: training rows if the model saw this corpus, else fold-in."""
        model = self.topic_model
        if model.corpus_digest and model.corpus_digest == corpus.digest():
            return np.array(model.doc_topic)
        return np.vstack([
            infer_proportions(doc, model, self.infer_iterations, document_seed(self.seed, i))
            for i, doc in enumerate(corpus.documents)
        ])

    def _represent(self, corpus):
        m = self.metric_
        if m.name in WORD_METRICS:
            reps = []
            for i, doc in enumerate(corpus.documents):
                try:
                    ids, mass = embedded_support(doc, self.embeddings)
                except DistanceError as exc:
                    raise DistanceError(f"document {corpus.ids[i]!r}: {exc}") from exc
                if m.name == "wmd-t":
                    ids, mass = _truncate_doc(ids, mass, m.doc_truncation)
                reps.append((ids, mass))
            return reps
        if m.name in TOPIC_METRICS:
            props = self.proportions(corpus)
            if m.name == "hoftt":
                return [(np.flatnonzero(p > 0), p[p > 0]) for p in props]
            return [(s.topics, s.mass) for s in map(truncate_proportions, props)]
        if m.name == "lda":
            return list(self.proportions(corpus))
        return list(self.vectorizer_.transform(corpus.count_matrix()))

    def _context(self):
        m = self.metric_
        if m.name in ("wmd", "wmd-t"):
            return "word", {"vectors": self.embeddings.vectors, "power": m.ground_power}
        if m.name == "rwmd":
            return "relaxed", {"vectors": self.embeddings.vectors, "power": m.ground_power}
        if m.name in TOPIC_METRICS:
            return "topic", {"costs": self.topic_costs.costs, "power": self.topic_costs.ground_power}
        return "vector", {"vector_kind": "cosine" if m.name == "cosine" else "euclidean"}

    def fit(self, corpus, y=None):
        self.metric_ = Metric.coerce(self.metric)
        self._check_resources(self.metric_)
        if self.metric_.name in ("nbow", "tfidf", "lsi", "cosine"):
            method = "nbow" if self.metric_.name == "cosine" else self.metric_.name
            self.vectorizer_ = BowVectorizer(method, n_components=self.metric_.lsi_dim)
            self.vectorizer_.fit(corpus.count_matrix())
        self.reference_ = corpus
        self.reference_reps_ = self._represent(corpus)
        return self

    def _compute(self, left, right, left_ids, right_ids, upper):
        kind, ctx = self._context()
        n = len(left)
        workers = max(1, int(self.n_jobs or 1))
        if workers == 1 or n < 2:
            blocks = [_rows_block(kind, ctx, range(n), left, right, left_ids, right_ids, upper)]
        else:
            chunks = [list(range(c, n, workers * 4)) for c in range(min(n, workers * 4))]
            blocks = Parallel(n_jobs=workers)(
                delayed(_rows_block)(kind, ctx, rows, left, right, left_ids, right_ids, upper)
                for rows in chunks
            )
        out = np.zeros((n, len(right)))
        for block in blocks:
            for i, vals in block:
                if upper:
                    out[i, i + 1:] = vals
                else:
                    out[i] = vals
        if upper:
            out = out + out.T
        return out

    def transform(self, corpus):
        """Distances from each document of ``corpus`` to every reference document."""
        check_is_fitted(self, "reference_reps_")
        reps = self._represent(corpus)
        return self._compute(reps, self.reference_reps_, corpus.ids, self.reference_.ids, upper=False)

    def pairwise(self, config=None):
        """Symmetric :class:`DistanceMatrix` over the reference corpus."""
        check_is_fitted(self, "reference_reps_")
        corpus = self.reference_
        start = time.perf_counter()
        values = self._compute(self.reference_reps_, self.reference_reps_, corpus.ids, corpus.ids,
                               upper=True)
        elapsed = time.perf_counter() - start
        n = len(corpus)
        pairs = n * (n - 1) // 2
        dm = DistanceMatrix(values, corpus.ids, corpus.labels, self.metric_.descriptor(),
                            dict(config or {}))
        dm.timing = {
            "seconds": elapsed,
            "pairs": pairs,
            "pairs_per_second": pairs / elapsed if elapsed > 0 and pairs else float("nan"),
            "workers": int(self.n_jobs or 1),
        }
        return dm


def pairwise_matrix(corpus, metric, embeddings=None, topic_model=None, topic_costs=None,
                    infer_iterations=DEFAULT_INFER_ITERATIONS, seed=0, workers=1, config=None):
    """All n(n-1)/2 document distances of ``corpus`` as a :class:`DistanceMatrix`."""
    est = DocumentDistance(metric, embeddings, topic_model, topic_costs, infer_iterations, seed, workers)
    return est.fit(corpus).pairwise(config)

