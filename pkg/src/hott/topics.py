"""LDA by collapsed Gibbs sampling, fold-in inference, and the two truncation rules."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from . import _container
from ._gibbs import fold_in_sweep, gibbs_sweep

DEFAULT_NUM_TOPICS = 70
DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_INFER_ITERATIONS = 50


class TopicModelError(ValueError):
    pass


def default_alpha(num_topics):
    if num_topics < 1:
        raise TopicModelError("num_topics must be >= 1")
    return 50.0 / num_topics


@dataclass(frozen=True)
class TopicModel:
    topic_word: np.ndarray
    doc_topic: np.ndarray
    alpha: float
    beta: float
    seed: int
    iterations: int = 0
    vocabulary: tuple = ()
    corpus_digest: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def num_topics(self):
        return int(self.topic_word.shape[0])

    @property
    def vocab_size(self):
        return int(self.topic_word.shape[1])

    def save(self, path):
        meta = {
            "num_topics": self.num_topics,
            "vocab_size": self.vocab_size,
            "num_documents": int(self.doc_topic.shape[0]),
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "iterations": self.iterations,
            "vocabulary": list(self.vocabulary),
            "corpus_digest": self.corpus_digest,
            "config": self.extra,
        }
        _container.write_container(
            path, "topic_model", meta,
            {"topic_word": self.topic_word, "doc_topic": self.doc_topic},
        )

    @classmethod
    def load(cls, path):
        _, meta, arrays = _container.read_container(path, expect_kind="topic_model")
        return cls(
            topic_word=arrays["topic_word"],
            doc_topic=arrays["doc_topic"],
            alpha=meta["alpha"],
            beta=meta["beta"],
            seed=meta["seed"],
            iterations=meta["iterations"],
            vocabulary=tuple(meta["vocabulary"]),
            corpus_digest=meta["corpus_digest"],
            extra=meta.get("config", {}),
        )

    def digest(self):
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.topic_word, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.doc_topic, dtype="<f8").tobytes())
        h.update(repr((self.alpha, self.beta, self.seed, self.iterations)).encode())
        return h.hexdigest()


def _expand_tokens(X):
    """Token streams (word ids, doc ids) from a CSR count matrix, ids ascending per doc."""
    X = sp.csr_matrix(X)
    X.sort_indices()
    counts = X.data
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise TopicModelError("counts must be nonnegative integers")
    counts = counts.astype(np.int64)
    words = np.repeat(X.indices.astype(np.int64), counts)
    row_of_entry = np.repeat(np.arange(X.shape[0], dtype=np.int64), np.diff(X.indptr))
    docs = np.repeat(row_of_entry, counts)
    return words, docs


def _check_priors(num_topics, alpha, beta):
    if num_topics < 2:
        raise TopicModelError("num_topics must be >= 2")
    if not alpha > 0 or not beta > 0:
        raise TopicModelError("Dirichlet priors must be positive")


def gibbs_lda(X, num_topics, alpha, beta, iterations, seed):
    """Run collapsed Gibbs sampling on count matrix ``X``.

    Returns smoothed (topic_word, doc_topic) from the final sweep's counts.
    """
    _check_priors(num_topics, alpha, beta)
    if iterations < 1:
        raise TopicModelError("iterations must be >= 1")
    X = sp.csr_matrix(X)
    n_docs, V = X.shape
    if n_docs == 0:
        raise TopicModelError("empty corpus")
    words, docs = _expand_tokens(X)
    if words.size == 0:
        raise TopicModelError("empty corpus")
    rng = np.random.default_rng(seed)
    z = rng.integers(0, num_topics, size=words.size).astype(np.int64)
    n_dk = np.zeros((n_docs, num_topics), dtype=np.int64)
    n_kw = np.zeros((num_topics, V), dtype=np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_kw, (z, words), 1)
    n_k = n_kw.sum(axis=1)
    for _ in range(iterations):
        gibbs_sweep(words, docs, z, n_dk, n_kw, n_k, float(alpha), float(beta),
                    float(V * beta), rng.random(words.size))
    topic_word = (n_kw + beta) / (n_k[:, None] + V * beta)
    doc_len = n_dk.sum(axis=1)
    doc_topic = (n_dk + alpha) / (doc_len[:, None] + num_topics * alpha)
    return topic_word, doc_topic


def fit_lda(corpus, num_topics=DEFAULT_NUM_TOPICS, alpha=None, beta=DEFAULT_BETA,
            iterations=DEFAULT_ITERATIONS, seed=0):
    """Fit LDA on a :class:`~hott.corpus.Corpus`; ``alpha`` defaults to 50/|T|."""
    if len(corpus) == 0:
        raise TopicModelError("empty corpus")
    if alpha is None:
        alpha = default_alpha(num_topics)
    topic_word, doc_topic = gibbs_lda(corpus.count_matrix(), num_topics, alpha, beta, iterations, seed)
    return TopicModel(
        topic_word=topic_word, doc_topic=doc_topic, alpha=float(alpha), beta=float(beta),
        seed=int(seed), iterations=int(iterations), vocabulary=corpus.vocabulary.words,
        corpus_digest=corpus.digest(),
    )


def _fold_in(word_ids, counts, phi, alpha, iterations, rng):
    words = np.repeat(np.asarray(word_ids, dtype=np.int64), np.asarray(counts, dtype=np.int64))
    if words.size == 0:
        raise TopicModelError("cannot infer proportions of an empty document")
    T = phi.shape[0]
    z = rng.integers(0, T, size=words.size).astype(np.int64)
    n_k = np.bincount(z, minlength=T).astype(np.int64)
    for _ in range(iterations):
        fold_in_sweep(words, z, n_k, phi, float(alpha), rng.random(words.size))
    return (n_k + alpha) / (words.size + T * alpha)


def infer_proportions(doc, model, iterations=DEFAULT_INFER_ITERATIONS, seed=0):
    """Topic proportions of a held-out document by fold-in Gibbs sampling.

    Topic-word probabilities stay fixed at the fitted values.
    """
    if iterations < 1:
        raise TopicModelError("iterations must be >= 1")
    if doc.support.size and doc.support[-1] >= model.vocab_size:
        raise TopicModelError("document support outside the model vocabulary")
    rng = np.random.default_rng(seed)
    return _fold_in(doc.support, doc.counts, model.topic_word, model.alpha, iterations, rng)


def document_seed(seed, index):
    """Per-document seed so fold-in results do not depend on scheduling."""
    return np.random.SeedSequence([int(seed), int(index)])


@dataclass(frozen=True)
class TruncatedTopic:
    support: np.ndarray
    mass: np.ndarray


def top_k(weights, k):
    """Indices of the ``k`` largest weights, descending, ties by ascending index."""
    weights = np.asarray(weights, dtype=np.float64)
    order = np.lexsort((np.arange(weights.size), -weights))
    return order[:k]


def truncate_topic(topic, k=20):
    """Keep the ``k`` heaviest words of a topic and renormalize."""
    if k < 1:
        raise TopicModelError("k must be >= 1")
    topic = np.asarray(topic, dtype=np.float64)
    support = top_k(topic, k)
    mass = topic[support]
    return TruncatedTopic(support, mass / mass.sum())


@dataclass(frozen=True)
class SparseProportions:
    topics: np.ndarray
    mass: np.ndarray

    @property
    def kappa(self):
        return int(self.topics.size)


def truncate_proportions(dbar):
    """Drop topic proportions below 1/(|T|+1) and renormalize the survivors."""
    dbar = np.asarray(dbar, dtype=np.float64)
    keep = np.flatnonzero(dbar >= 1.0 / (dbar.size + 1))
    if keep.size == 0:
        keep = np.array([int(np.argmax(dbar))])
    mass = dbar[keep]
    return SparseProportions(keep, mass / mass.sum())


class LatentDirichletGibbs(BaseEstimator, TransformerMixin):
    """LDA fitted by collapsed Gibbs sampling, scikit-learn style.

    ``fit`` takes a document-word count matrix. ``transform`` infers topic
    proportions of new documents by fold-in sampling with per-row seeds, while
    ``fit_transform`` returns the training proportions from the final sweep.

    Parameters
    ----------
    n_topics : int, default=70
    alpha : float or None, default=None
        Symmetric prior on document proportions; None means 50 / n_topics.
    beta : float, default=0.01
        Symmetric prior on topic-word distributions.
    n_iter : int, default=1000
        Training sweeps.
    infer_iter : int, default=50
        Fold-in sweeps per held-out document.
    random_state : int, default=0
    """

    def __init__(self, n_topics=DEFAULT_NUM_TOPICS, alpha=None, beta=DEFAULT_BETA,
                 n_iter=DEFAULT_ITERATIONS, infer_iter=DEFAULT_INFER_ITERATIONS, random_state=0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.infer_iter = infer_iter
        self.random_state = random_state

    def _alpha(self):
        return default_alpha(self.n_topics) if self.alpha is None else float(self.alpha)

    def fit(self, X, y=None):
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        self.components_, self.doc_topic_ = gibbs_lda(
            X, self.n_topics, self._alpha(), self.beta, self.n_iter, self.random_state
        )
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).doc_topic_

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = sp.csr_matrix(check_array(X, accept_sparse="csr", dtype=np.float64))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        X.sort_indices()
        out = np.empty((X.shape[0], self.n_topics))
        for i in range(X.shape[0]):
            row = X.getrow(i)
            rng = np.random.default_rng(document_seed(self.random_state, i))
            out[i] = _fold_in(row.indices, row.data.astype(np.int64), self.components_,
                              self._alpha(), self.infer_iter, rng)
        return out

    def to_model(self, vocabulary=(), corpus_digest=""):
        check_is_fitted(self, "components_")
        return TopicModel(
            topic_word=self.components_, doc_topic=self.doc_topic_, alpha=self._alpha(),
            beta=float(self.beta), seed=int(self.random_state), iterations=int(self.n_iter),
            vocabulary=tuple(vocabulary), corpus_digest=corpus_digest,
        )
