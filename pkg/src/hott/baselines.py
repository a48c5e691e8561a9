"""Vector-space baselines: nBOW, TF-IDF, LSI and LDA proportions."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from . import _container

METHODS = ("nbow", "tfidf", "lsi", "lda")


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class VectorRepresentation:
    method: str
    vectors: np.ndarray
    params: dict = field(default_factory=dict)

    def save(self, path):
        _container.write_container(
            path, "vectors", {"method": self.method, "params": self.params},
            {"vectors": self.vectors},
        )

    @classmethod
    def load(cls, path):
        _, meta, arrays = _container.read_container(path, expect_kind="vectors")
        return cls(meta["method"], arrays["vectors"], meta["params"])


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)


def _row_normalize(X, norm):
    X = np.array(X, dtype=np.float64)
    if norm == "l1":
        s = X.sum(axis=1, keepdims=True)
    else:
        s = np.sqrt((X * X).sum(axis=1, keepdims=True))
    s[s == 0] = 1.0
    return X / s


def smoothed_idf(X):
    """1 + ln((1 + n) / (1 + df)) per column of count matrix ``X``."""
    n = X.shape[0]
    df = np.asarray((X > 0).sum(axis=0)).ravel()
    return 1.0 + np.log((1.0 + n) / (1.0 + df))


def _fix_signs(components):
    """Flip each row so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None], signs


class BowVectorizer(BaseEstimator, TransformerMixin):
    """Document vectors from a document-word count matrix.

    ``method`` is one of ``nbow``, ``tfidf``, ``lsi`` or ``lda``. LSI projects
    the TF-IDF matrix onto its top ``n_components`` right singular vectors;
    ``lda`` needs a fitted :class:`~hott.topics.LatentDirichletGibbs` (or any
    transformer returning topic proportions) as ``topic_model``.
    """

    def __init__(self, method="nbow", n_components=70, topic_model=None):
        self.method = method
        self.n_components = n_components
        self.topic_model = topic_model

    def fit(self, X, y=None):
        if self.method not in METHODS:
            raise BaselineError(f"unknown method {self.method!r}; expected one of {METHODS}")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        if self.method in ("tfidf", "lsi"):
            self.idf_ = smoothed_idf(X)
        if self.method == "lsi":
            k = int(self.n_components)
            if not 1 <= k <= min(X.shape):
                raise BaselineError(
                    f"LSI dimension {k} must lie in [1, min(|D|, |V|) = {min(X.shape)}]"
                )
            tfidf = self._tfidf(X)
            _, s, vt = np.linalg.svd(tfidf, full_matrices=False)
            self.components_, _ = _fix_signs(vt[:k])
            self.singular_values_ = s[:k]
        if self.method == "lda":
            if self.topic_model is None:
                raise BaselineError("method 'lda' requires a fitted topic model")
            check_is_fitted(self.topic_model, "components_")
        return self

    def _tfidf(self, X):
        return _row_normalize(_dense(X) * self.idf_[None, :], "l2")

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise BaselineError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        if self.method == "nbow":
            return _row_normalize(_dense(X), "l1")
        if self.method == "tfidf":
            return self._tfidf(X)
        if self.method == "lsi":
            return self._tfidf(X) @ self.components_.T
        return self.topic_model.transform(X)


def build_vectors(corpus, method, params=None, model=None):
    """Vector representation of ``corpus``.

    For ``lda`` the rows of the fitted model's ``doc_topic`` are used when the
    model was trained on this corpus.
    """
    params = dict(params or {})
    X = corpus.count_matrix()
    if method == "lda":
        if model is None:
            raise BaselineError("method 'lda' requires a fitted topic model")
        if model.doc_topic.shape[0] != len(corpus):
            raise BaselineError("topic model was fitted on a different corpus")
        return VectorRepresentation("lda", np.array(model.doc_topic), params)
    vec = BowVectorizer(method, n_components=params.get("n_components", 70)).fit(X)
    if method == "lsi":
        params.setdefault("n_components", int(vec.n_components))
    return VectorRepresentation(method, vec.transform(X), params)


def vector_distance(u, v, kind="euclidean"):
    """Euclidean distance or cosine distance (1 - cosine similarity)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise BaselineError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if kind == "euclidean":
        d = u - v
        return float(np.sqrt(d @ d))
    if kind == "cosine":
        nu = np.sqrt(u @ u)
        nv = np.sqrt(v @ v)
        if nu == 0 and nv == 0:
            return 0.0
        if nu == 0 or nv == 0:
            return 1.0
        return float(1.0 - (u @ v) / (nu * nv))
    raise BaselineError(f"unknown distance kind {kind!r}")
