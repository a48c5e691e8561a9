"""Corpus ingestion: tokenization, vocabularies and normalized bag-of-words."""
import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import groupby

import numpy as np
import scipy.sparse as sp

# candidate runs: \w minus digits and underscore
_ALPHA_RUN = re.compile(r"[^\W\d_]+")


class CorpusError(ValueError):
    pass


def tokenize(text, lowercase=True):
    """Split ``text`` into maximal runs of alphabetic characters.

    >>> tokenize("Cats chase cats!")
    ['cats', 'chase', 'cats']
    """
    if lowercase:
        text = text.lower()
    tokens = []
    for run in _ALPHA_RUN.findall(text):
        if run.isalpha():
            tokens.append(run)
        else:
            # the regex also admits numeric non-digits such as '²'
            tokens.extend("".join(g) for alpha, g in groupby(run, str.isalpha) if alpha)
    return tokens


@dataclass(frozen=True)
class RawDocument:
    label: str
    tokens: tuple
    id: str


@dataclass(frozen=True)
class Vocabulary:
    words: tuple
    index: dict = field(compare=False, repr=False)

    @classmethod
    def from_words(cls, words):
        words = tuple(words)
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise CorpusError("duplicate tokens in vocabulary")
        if any(not w for w in words):
            raise CorpusError("empty token in vocabulary")
        return cls(words, index)

    @property
    def size(self):
        return len(self.words)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def save(self, path):
        """One token per line; the line number is the id."""
        with open(path, "w", encoding="utf-8") as fh:
            for w in self.words:
                fh.write(w + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_words(line.rstrip("\n") for line in fh if line.rstrip("\n"))


@dataclass(frozen=True)
class DocumentDistribution:
    """Normalized bag-of-words over vocabulary ids.

    ``support`` is strictly increasing; ``counts`` holds the raw in-vocabulary
    counts so that ``mass == counts / total_words``.
    """

    support: np.ndarray
    mass: np.ndarray
    total_words: int
    counts: np.ndarray = field(default=None, compare=False, repr=False)

    @classmethod
    def from_counts(cls, support, counts):
        support = np.asarray(support, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        order = np.argsort(support, kind="stable")
        support, counts = support[order], counts[order]
        keep = counts > 0
        support, counts = support[keep], counts[keep]
        if support.size == 0:
            raise CorpusError("document empty after filtering")
        if np.any(np.diff(support) <= 0):
            raise CorpusError("duplicate ids in document support")
        total = int(counts.sum())
        mass = counts / total
        for arr in (support, mass, counts):
            arr.setflags(write=False)
        return cls(support, mass, total, counts)

    def __len__(self):
        return int(self.support.size)

    def dense(self, size):
        out = np.zeros(size)
        out[self.support] = self.mass
        return out


@dataclass(frozen=True)
class Corpus:
    vocabulary: Vocabulary
    documents: tuple
    labels: tuple
    ids: tuple = None

    def __post_init__(self):
        if len(self.documents) != len(self.labels):
            raise CorpusError("documents and labels differ in length")
        if self.ids is None:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(len(self.documents))))
        V = self.vocabulary.size
        for doc in self.documents:
            if doc.support.size and doc.support[-1] >= V:
                raise CorpusError("document support outside vocabulary")

    def __len__(self):
        return len(self.documents)

    @property
    def class_set(self):
        return tuple(sorted(set(self.labels)))

    def count_matrix(self):
        """Sparse |D| x |V| matrix of in-vocabulary word counts."""
        indptr = np.zeros(len(self) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(d) for d in self.documents])
        if self.documents:
            indices = np.concatenate([d.support for d in self.documents])
            data = np.concatenate([d.counts for d in self.documents]).astype(np.float64)
        else:
            indices = np.zeros(0, dtype=np.int64)
            data = np.zeros(0)
        return sp.csr_matrix((data, indices, indptr), shape=(len(self), self.vocabulary.size))

    def subset(self, indices):
        indices = list(indices)
        return Corpus(
            self.vocabulary,
            tuple(self.documents[i] for i in indices),
            tuple(self.labels[i] for i in indices),
            tuple(self.ids[i] for i in indices),
        )

    def digest(self):
        """Content hash identifying vocabulary, documents and labels."""
        h = hashlib.sha256()
        h.update("\n".join(self.vocabulary.words).encode("utf-8"))
        for doc_id, label, doc in zip(self.ids, self.labels, self.documents):
            h.update(f"\x00{doc_id}\x01{label}\x02".encode("utf-8"))
            h.update(doc.support.astype("<i8").tobytes())
            h.update(doc.counts.astype("<i8").tobytes())
        return h.hexdigest()

    def to_json(self):
        return {
            "vocabulary": list(self.vocabulary.words),
            "documents": [
                {
                    "id": doc_id,
                    "label": label,
                    "support": doc.support.tolist(),
                    "counts": doc.counts.tolist(),
                }
                for doc_id, label, doc in zip(self.ids, self.labels, self.documents)
            ],
        }

    @classmethod
    def from_json(cls, obj):
        vocab = Vocabulary.from_words(obj["vocabulary"])
        docs, labels, ids = [], [], []
        for rec in obj["documents"]:
            docs.append(DocumentDistribution.from_counts(rec["support"], rec["counts"]))
            labels.append(rec["label"])
            ids.append(rec["id"])
        return cls(vocab, tuple(docs), tuple(labels), tuple(ids))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def read_labeled_text(path, lowercase=True):
    """Read ``label<TAB>text`` lines into :class:`RawDocument` records.

    Ids are ``<line number>`` (1-based); blank lines are skipped.
    """
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if "\t" not in line:
                raise CorpusError(f"{path}:{lineno}: expected 'label<TAB>text'")
            label, text = line.split("\t", 1)
            if not label:
                raise CorpusError(f"{path}:{lineno}: empty label")
            docs.append(RawDocument(label, tuple(tokenize(text, lowercase)), str(lineno)))
    return docs


def build_vocabulary(docs, min_doc_freq=1, max_size=None):
    """Keep tokens present in at least ``min_doc_freq`` documents.

    If more than ``max_size`` survive, the most frequent (by total count) are
    kept, ties broken lexicographically. Ids follow lexicographic order.
    """
    if min_doc_freq < 1:
        raise CorpusError("min_doc_freq must be >= 1")
    if max_size is not None and max_size < 1:
        raise CorpusError("max_size must be >= 1")
    doc_freq = Counter()
    total = Counter()
    for doc in docs:
        total.update(doc.tokens)
        doc_freq.update(set(doc.tokens))
    kept = [w for w, df in doc_freq.items() if df >= min_doc_freq and w]
    if max_size is not None and len(kept) > max_size:
        kept.sort(key=lambda w: (-total[w], w))
        kept = kept[:max_size]
    if not kept:
        raise CorpusError("empty vocabulary")
    return Vocabulary.from_words(sorted(kept))


def to_distribution(doc, vocab):
    """Normalized BOW of ``doc``; out-of-vocabulary tokens are dropped first."""
    tokens = doc.tokens if isinstance(doc, RawDocument) else doc
    counts = Counter(vocab.index[t] for t in tokens if t in vocab.index)
    if not counts:
        raise CorpusError("document empty after filtering")
    ids = sorted(counts)
    return DocumentDistribution.from_counts(ids, [counts[i] for i in ids])


def build_corpus(docs, vocab, skip_empty=False):
    """Convert raw documents against ``vocab``.

    Documents with no in-vocabulary token raise, unless ``skip_empty``.
    """
    dists, labels, ids = [], [], []
    for doc in docs:
        try:
            dist = to_distribution(doc, vocab)
        except CorpusError:
            if skip_empty:
                continue
            raise CorpusError(f"document {doc.id}: document empty after filtering") from None
        dists.append(dist)
        labels.append(doc.label)
        ids.append(doc.id)
    if not dists:
        raise CorpusError("corpus is empty")
    return Corpus(vocab, tuple(dists), tuple(labels), tuple(ids))


def split_corpus(corpus, train_fraction=0.8, mode="in-order", seed=0):
    """Train/test split; ``in-order`` takes the first ceil(fraction * |D|) documents."""
    if not 0 < train_fraction < 1:
        raise CorpusError("train_fraction must lie strictly between 0 and 1")
    n = len(corpus)
    # guard against 0.7 * 10 == 7.000000000000001
    n_train = math.ceil(train_fraction * n - 1e-9)
    if n_train < 1 or n_train >= n:
        raise CorpusError(f"split of {n} documents at {train_fraction} leaves an empty side")
    if mode == "in-order":
        order = np.arange(n)
    elif mode == "seeded-shuffle":
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise CorpusError(f"unknown split mode {mode!r}")
    return corpus.subset(order[:n_train]), corpus.subset(order[n_train:])
