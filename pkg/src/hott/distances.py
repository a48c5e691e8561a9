"""Document distances: WMD and its truncated/relaxed variants, HOTT/HOFTT, topic costs."""
from dataclasses import dataclass, field

import numpy as np

from . import _container
from .embeddings import euclidean
from .topics import top_k, truncate_proportions, truncate_topic
from .transport import relaxed_cost, wasserstein

DEFAULT_TOPIC_TRUNCATION = 20
DEFAULT_DOC_TRUNCATION = 20


class DistanceError(ValueError):
    pass


def embedded_support(doc, table):
    """(word ids, renormalized masses) of ``doc`` restricted to embedded words."""
    ids = np.asarray(doc.support, dtype=np.int64)
    mass = np.asarray(doc.mass, dtype=np.float64)
    keep = table.present[ids]
    if not keep.any():
        raise DistanceError("document has no embedded words (empty filtered support)")
    if keep.all():
        return ids, mass
    mass = mass[keep]
    return ids[keep], mass / mass.sum()


def _ground(ids_a, ids_b, table):
    return euclidean(table.vectors[ids_a], table.vectors[ids_b])


def word_transport(ids_a, mass_a, ids_b, mass_b, table, ground_power=1):
    """Wasserstein distance between two weighted word sets."""
    return wasserstein(mass_a, mass_b, _ground(ids_a, ids_b, table), ground_power)


def wmd(d1, d2, table, ground_power=1):
    """Word mover's distance between two normalized bag-of-words documents."""
    a, pa = embedded_support(d1, table)
    b, pb = embedded_support(d2, table)
    return word_transport(a, pa, b, pb, table, ground_power)


def _truncate_doc(ids, mass, k):
    keep = np.sort(top_k(mass, k)) if mass.size > k else np.arange(mass.size)
    m = mass[keep]
    return ids[keep], m / m.sum()


def wmd_truncated(d1, d2, table, k=DEFAULT_DOC_TRUNCATION, ground_power=1):
    """WMD after keeping each document's ``k`` heaviest embedded words."""
    if k < 1:
        raise DistanceError("k must be >= 1")
    a, pa = _truncate_doc(*embedded_support(d1, table), k)
    b, pb = _truncate_doc(*embedded_support(d2, table), k)
    return word_transport(a, pa, b, pb, table, ground_power)


def rwmd(d1, d2, table, ground_power=1):
    """Relaxed WMD: the larger of the two one-marginal relaxations."""
    a, pa = embedded_support(d1, table)
    b, pb = embedded_support(d2, table)
    D = _ground(a, b, table)
    if ground_power == 2:
        return float(np.sqrt(relaxed_cost(pa, pb, D * D).value))
    if ground_power != 1:
        raise DistanceError("ground_power must be 1 or 2")
    return relaxed_cost(pa, pb, D).value


@dataclass(frozen=True)
class TopicCostMatrix:
    costs: np.ndarray
    truncation_k: int
    ground_power: int = 1
    model_digest: str = ""
    config: dict = field(default_factory=dict, compare=False)

    @property
    def num_topics(self):
        return int(self.costs.shape[0])

    def save(self, path):
        meta = {
            "num_topics": self.num_topics,
            "truncation_k": self.truncation_k,
            "ground_power": self.ground_power,
            "model_digest": self.model_digest,
            "config": self.config,
        }
        _container.write_container(path, "topic_costs", meta, {"costs": self.costs})

    @classmethod
    def load(cls, path):
        _, meta, arrays = _container.read_container(path, expect_kind="topic_costs")
        return cls(arrays["costs"], meta["truncation_k"], meta["ground_power"],
                   meta["model_digest"], meta.get("config", {}))


def topic_cost_matrix(model, table, truncation_k=DEFAULT_TOPIC_TRUNCATION, ground_power=1):
    """Pairwise word mover's distances between truncated topics.

    Each topic keeps its ``truncation_k`` heaviest words; words without an
    embedding are then dropped and the remainder renormalized. Pass
    ``truncation_k=None`` to use full topics.
    """
    topic_word = model.topic_word if hasattr(model, "topic_word") else np.asarray(model)
    T, V = topic_word.shape
    k = V if truncation_k is None else int(truncation_k)
    sites = []
    for t in range(T):
        trunc = truncate_topic(topic_word[t], k)
        keep = table.present[trunc.support]
        if not keep.any():
            raise DistanceError(f"topic {t}: no word of its truncated support has an embedding")
        mass = trunc.mass[keep]
        order = np.argsort(trunc.support[keep], kind="stable")
        sites.append((trunc.support[keep][order], (mass / mass.sum())[order]))

    words = np.unique(np.concatenate([s[0] for s in sites]))
    position = {int(w): i for i, w in enumerate(words)}
    ground = euclidean(table.vectors[words], table.vectors[words])
    local = [np.array([position[int(w)] for w in ids]) for ids, _ in sites]

    costs = np.zeros((T, T))
    for i in range(T):
        for j in range(i + 1, T):
            D = ground[np.ix_(local[i], local[j])]
            costs[i, j] = costs[j, i] = wasserstein(sites[i][1], sites[j][1], D, ground_power)
    digest = model.digest() if hasattr(model, "digest") else ""
    return TopicCostMatrix(costs, k, ground_power, digest)


def hott(p1, p2, costs, truncate=True):
    """Topic transport distance between two documents' topic proportions.

    ``truncate=True`` drops proportions below 1/(|T|+1) first (HOTT);
    ``truncate=False`` transports the full proportions (HOFTT).
    """
    C = costs.costs if isinstance(costs, TopicCostMatrix) else np.asarray(costs, dtype=np.float64)
    power = costs.ground_power if isinstance(costs, TopicCostMatrix) else 1
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != (C.shape[0],) or p2.shape != (C.shape[0],):
        raise DistanceError(
            f"proportions of length {p1.size}/{p2.size} do not match {C.shape[0]} topic costs"
        )
    if truncate:
        s1, s2 = truncate_proportions(p1), truncate_proportions(p2)
        t1, m1, t2, m2 = s1.topics, s1.mass, s2.topics, s2.mass
    else:
        t1, t2 = np.flatnonzero(p1 > 0), np.flatnonzero(p2 > 0)
        m1, m2 = p1[t1], p2[t2]
    return wasserstein(m1, m2, C[np.ix_(t1, t2)], power)


@dataclass
class DistanceMatrix:
    values: np.ndarray
    ids: tuple
    labels: tuple
    metric: dict
    config: dict = field(default_factory=dict)
    # wall-clock figures; deliberately not persisted so artifacts stay reproducible
    timing: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        V = np.asarray(self.values, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise DistanceError("distance matrix must be square")
        if len(self.ids) != V.shape[0] or len(self.labels) != V.shape[0]:
            raise DistanceError("ids/labels do not match matrix size")
        self.values = V

    @property
    def n(self):
        return int(self.values.shape[0])

    def save(self, path):
        meta = {
            "n": self.n,
            "metric": self.metric,
            "ids": list(self.ids),
            "labels": list(self.labels),
            "config": self.config,
        }
        _container.write_container(path, "distance_matrix", meta, {"distances": self.values})

    @classmethod
    def load(cls, path):
        _, meta, arrays = _container.read_container(path, expect_kind="distance_matrix")
        return cls(arrays["distances"], tuple(meta["ids"]), tuple(meta["labels"]),
                   meta["metric"], meta.get("config", {}))

    def to_csv(self, path):
        """``id,label,<ids...>`` header then one row per document, full precision."""
        import csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "label", *self.ids])
            for doc_id, label, row in zip(self.ids, self.labels, self.values):
                w.writerow([doc_id, label, *(repr(float(x)) for x in row)])

