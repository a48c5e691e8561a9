"""k-NN classification, metric comparison statistics, bound checks and throughput."""
import math
import platform
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .distances import DistanceMatrix, embedded_support, hott, topic_cost_matrix
from .embeddings import euclidean
from .pairwise import DocumentDistance, _pair_value
from .transport import _hausdorff_matrix, relaxed_cost, wasserstein


class EvaluationError(ValueError):
    pass


# --------------------------------------------------------------------------- k-NN


def knn_vote(distances, train_labels, k):
    """Majority label among the ``k`` nearest training points of one query.

    Distance ties go to the lower training index; vote ties go to the tied
    label whose closest member ranks first.
    """
    order = np.lexsort((np.arange(distances.size), distances))[:k]
    votes = Counter(train_labels[i] for i in order)
    best = max(votes.values())
    for i in order:
        if votes[train_labels[i]] == best:
            return train_labels[i]


class NearestNeighborVote(BaseEstimator, ClassifierMixin):
    """k-NN classifier on precomputed distances with deterministic tie rules.

    ``fit(D_train, y)`` stores the labels (``D_train`` may be None);
    ``predict(D)`` takes an (n_queries, n_train) distance matrix.
    """

    def __init__(self, n_neighbors=1):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        self.train_labels_ = list(y)
        if not self.train_labels_:
            raise EvaluationError("empty training set")
        self.classes_ = np.array(sorted(set(self.train_labels_)))
        return self

    def predict(self, X):
        check_is_fitted(self, "train_labels_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.train_labels_):
            raise EvaluationError("distance matrix must be (n_queries, n_train)")
        if not 1 <= self.n_neighbors <= len(self.train_labels_):
            raise EvaluationError("n_neighbors must lie in [1, n_train]")
        return np.array([knn_vote(row, self.train_labels_, self.n_neighbors) for row in X])


@dataclass
class KnnReport:
    errors: dict
    metric: dict
    n_train: int = 0
    n_test: int = 0
    config: dict = field(default_factory=dict)

    @property
    def ks(self):
        return sorted(self.errors)

    @property
    def best_k(self):
        return min(self.ks, key=lambda k: (self.errors[k], k))

    @property
    def best_error(self):
        return self.errors[self.best_k]

    def to_text(self):
        lines = [
            f"metric={_flat(self.metric)}",
            f"n_train={self.n_train}",
            f"n_test={self.n_test}",
        ]
        lines += [f"error_k{k}={self.errors[k]!r}" for k in self.ks]
        lines += [f"best_k={self.best_k}", f"best_error={self.best_error!r}"]
        lines += [f"config.{key}={_flat(v)}" for key, v in sorted(self.config.items())]
        return "\n".join(lines) + "\n"

    def to_tsv(self):
        rows = ["k\terror"] + [f"{k}\t{self.errors[k]!r}" for k in self.ks]
        return "\n".join(rows) + "\n"


def _flat(value):
    if isinstance(value, dict):
        return ",".join(f"{k}:{_flat(v)}" for k, v in sorted(value.items()))
    if isinstance(value, (list, tuple)):
        return ",".join(_flat(v) for v in value)
    return str(value)


def knn_evaluate(train_labels, test_labels, distances, ks, metric=None):
    """Test error of k-NN for each ``k`` from an (n_test, n_train) distance matrix."""
    train_labels = list(train_labels)
    test_labels = list(test_labels)
    ks = sorted(set(int(k) for k in ks))
    if not train_labels or not test_labels:
        raise EvaluationError("empty train or test set")
    if not ks:
        raise EvaluationError("no k requested")
    D = np.asarray(distances, dtype=np.float64)
    if D.shape != (len(test_labels), len(train_labels)):
        raise EvaluationError(f"distance matrix shape {D.shape} does not match (n_test, n_train)")
    for k in ks:
        if not 1 <= k <= len(train_labels):
            raise EvaluationError(f"k={k} outside [1, {len(train_labels)}]")
    errors = {}
    for k in ks:
        wrong = sum(knn_vote(row, train_labels, k) != truth for row, truth in zip(D, test_labels))
        errors[k] = wrong / len(test_labels)
    return KnnReport(errors, dict(metric or {}), len(train_labels), len(test_labels))


def knn_corpora(train, test, distance, ks):
    """Fit ``distance`` (a :class:`DocumentDistance`) on ``train`` and evaluate on ``test``."""
    if len(train) == 0 or len(test) == 0:
        raise EvaluationError("empty train or test set")
    D = distance.fit(train).transform(test)
    return knn_evaluate(train.labels, test.labels, D, ks, distance.metric_.descriptor())


def normalized_aggregate(reports, reference="nbow"):
    """Mean over corpora of each method's best-k error divided by the reference's.

    ``reports`` maps corpus name -> {method: KnnReport}.
    """
    sums, counts = {}, {}
    for name, by_method in reports.items():
        if reference not in by_method:
            raise EvaluationError(f"reference method {reference!r} missing for corpus {name!r}")
        ref = by_method[reference].best_error
        if ref == 0:
            raise EvaluationError(f"reference error is zero on corpus {name!r}; ratio undefined")
        for method, rep in by_method.items():
            sums[method] = sums.get(method, 0.0) + rep.best_error / ref
            counts[method] = counts.get(method, 0) + 1
    if not reports:
        raise EvaluationError("no reports given")
    return {m: sums[m] / counts[m] for m in sums}


# ------------------------------------------------------------------ matrix stats


def _values(D):
    return D.values if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=np.float64)


def _pearson(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx == 0 or syy == 0:
        raise EvaluationError("degenerate distance matrix: zero variance in upper triangle")
    return float(np.clip((xc @ yc) / math.sqrt(sxx * syy), -1.0, 1.0))


@dataclass(frozen=True)
class MantelResult:
    r: float
    p_value: float
    permutations: int


def mantel(D1, D2, permutations=999, seed=0):
    """Mantel test: Pearson r of the upper triangles and a two-sided permutation p-value.

    D2 is permuted jointly on rows and columns; the identity permutation is
    counted, so ``p >= 1 / (permutations + 1)``.
    """
    A, B = _values(D1), _values(D2)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EvaluationError("distance matrices must be square and of equal size")
    if permutations < 1:
        raise EvaluationError("permutations must be >= 1")
    n = A.shape[0]
    iu = np.triu_indices(n, k=1)
    x = A[iu]
    r = _pearson(x, B[iu])
    rng = np.random.default_rng(seed)
    hits = 1
    for _ in range(permutations):
        perm = rng.permutation(n)
        rp = _pearson(x, B[np.ix_(perm, perm)][iu])
        hits += abs(rp) >= abs(r)
    return MantelResult(r, hits / (permutations + 1), permutations)


def frobenius_diff(D1, D2):
    A, B = _values(D1), _values(D2)
    if A.shape != B.shape:
        raise EvaluationError("distance matrices differ in size")
    diff = A - B
    return float(np.sqrt(np.sum(diff * diff)))


# ------------------------------------------------------------------------ bounds


@dataclass
class BoundReport:
    """One document pair's distances and inequality residuals (lhs - rhs)."""

    rwmd: float
    wmd: float
    hausdorff: float
    hofftt: float
    mixture_w1: float
    kl_1: float
    kl_2: float
    diameter: float
    diameter_docs: float
    residuals: dict

    def holds(self, tol=1e-6):
        return all(v <= tol for v in self.residuals.values())

    def as_row(self):
        row = {k: getattr(self, k) for k in (
            "rwmd", "wmd", "hausdorff", "hofftt", "mixture_w1", "kl_1", "kl_2",
            "diameter", "diameter_docs")}
        row.update({f"residual_{k}": v for k, v in self.residuals.items()})
        return row


def _kl(p_ids, p_mass, q_dense):
    q = q_dense[p_ids]
    if np.any(q <= 0):
        raise EvaluationError("KL undefined: mixture has zero mass on a document word")
    return float(np.sum(p_mass * np.log(p_mass / q)))


def embedded_topics(topic_word, table):
    """Topics restricted to embedded words and renormalized."""
    T = np.array(topic_word, dtype=np.float64)
    T[:, ~table.present] = 0.0
    return T / T.sum(axis=1, keepdims=True)


def check_bounds(d1, d2, model, table, p1=None, p2=None, costs=None):
    """Evaluate the lower and upper bound chain on one document pair.

    Residuals: (a) rwmd - wmd; (b) rwmd - hausdorff; (c) W1(mix1, mix2) -
    hofftt; (d) wmd - [hofftt + diam * (sqrt(KL1/2) + sqrt(KL2/2))].
    ``p1``/``p2`` default to fold-in proportions and ``costs`` to the
    untruncated topic cost matrix (W1).
    """
    if p1 is None or p2 is None:
        from .topics import infer_proportions

        p1 = infer_proportions(d1, model) if p1 is None else p1
        p2 = infer_proportions(d2, model) if p2 is None else p2
    if costs is None:
        costs = topic_cost_matrix(model, table, truncation_k=None, ground_power=1)
    if getattr(costs, "ground_power", 1) != 1:
        raise EvaluationError("bound check needs W1 topic costs")

    a, pa = embedded_support(d1, table)
    b, pb = embedded_support(d2, table)
    D = euclidean(table.vectors[a], table.vectors[b])
    r = relaxed_cost(pa, pb, D).value
    w = wasserstein(pa, pb, D, 1)
    h = _hausdorff_matrix(D)
    hf = hott(p1, p2, costs, truncate=False)

    topics = embedded_topics(model.topic_word, table)
    mix1 = np.asarray(p1) @ topics
    mix2 = np.asarray(p2) @ topics
    words = np.flatnonzero(table.present & ((mix1 > 0) | (mix2 > 0)))
    words = np.union1d(words, np.union1d(a, b))
    G = euclidean(table.vectors[words], table.vectors[words])
    mw = wasserstein(mix1[words], mix2[words], G, 1)
    kl1 = _kl(a, pa, mix1)
    kl2 = _kl(b, pb, mix2)
    diam = float(G.max())
    docs = np.union1d(a, b)
    diam_docs = float(euclidean(table.vectors[docs], table.vectors[docs]).max())
    residuals = {
        "a": r - w,
        "b": r - h,
        "c": mw - hf,
        "d": w - (hf + diam * (math.sqrt(0.5 * kl1) + math.sqrt(0.5 * kl2))),
    }
    return BoundReport(r, w, h, hf, mw, kl1, kl2, diam, diam_docs, residuals)


# -------------------------------------------------------------------- throughput


def machine_note():
    return f"{platform.machine()} {platform.processor() or 'cpu'} python{platform.python_version()}"


def benchmark_throughput(corpus, distance, pair_budget=100, warmup=5, seed=0):
    """Single-worker pairs per second on randomly sampled document pairs.

    Document representations (e.g. topic proportions) are prepared before
    timing starts; only per-pair distance evaluation is measured.
    """
    if pair_budget < 1:
        raise EvaluationError("pair budget must be >= 1")
    if len(corpus) < 2:
        raise EvaluationError("need at least two documents")
    if not isinstance(distance, DocumentDistance):
        raise EvaluationError("distance must be a DocumentDistance")
    distance.set_params(n_jobs=1).fit(corpus)
    reps = distance.reference_reps_
    kind, ctx = distance._context()
    rng = np.random.default_rng(seed)
    n = len(corpus)

    def draw(count):
        i = rng.integers(0, n, size=count)
        j = (i + rng.integers(1, n, size=count)) % n
        return list(zip(i.tolist(), j.tolist()))

    for i, j in draw(warmup):
        _pair_value(kind, reps[i], reps[j], ctx)
    pairs = draw(pair_budget)
    start = time.perf_counter()
    for i, j in pairs:
        _pair_value(kind, reps[i], reps[j], ctx)
    elapsed = time.perf_counter() - start
    return {
        "metric": distance.metric_.descriptor(),
        "pairs": len(pairs),
        "warmup": int(warmup),
        "seconds": elapsed,
        "pairs_per_second": len(pairs) / elapsed if elapsed > 0 else float("inf"),
        "machine": machine_note(),
    }

