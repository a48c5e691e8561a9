"""Pre-trained word vectors and Euclidean ground costs between word sets."""
import gzip
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    """Word vectors indexed by vocabulary id.

    ``vectors`` is |V| x dimension; rows of words without a vector are zero
    and flagged false in ``present``.
    """

    vectors: np.ndarray
    present: np.ndarray
    words: tuple = ()

    @property
    def dimension(self):
        return int(self.vectors.shape[1])

    @property
    def coverage(self):
        if self.present.size == 0:
            return 0.0
        return float(self.present.mean())

    def __contains__(self, word_id):
        return 0 <= word_id < self.present.size and bool(self.present[word_id])

    def vector(self, word_id):
        if word_id not in self:
            raise EmbeddingError(f"no embedding for word {self._name(word_id)}")
        return self.vectors[word_id]

    def _name(self, word_id):
        if 0 <= word_id < len(self.words):
            return f"{self.words[word_id]!r} (id {word_id})"
        return f"id {word_id}"

    def check_ids(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        bad = ids[(ids < 0) | (ids >= self.present.size)]
        if bad.size == 0:
            bad = ids[~self.present[ids]]
        if bad.size:
            raise EmbeddingError(f"no embedding for word {self._name(int(bad[0]))}")
        return ids

    @classmethod
    def from_array(cls, vectors, words=(), present=None):
        vectors = np.array(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise EmbeddingError("vectors must be a 2-D array")
        if present is None:
            present = np.ones(vectors.shape[0], dtype=bool)
        present = np.asarray(present, dtype=bool)
        vectors[~present] = 0.0
        vectors.setflags(write=False)
        present.setflags(write=False)
        return cls(vectors, present, tuple(words))


def _open_text(source):
    if hasattr(source, "read"):
        return source, False
    source = str(source)
    with open(source, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(source, "rb"), encoding="utf-8"), True
    return open(source, encoding="utf-8"), True


def load_embeddings(source, vocab):
    """Read ``token v1 ... vD`` lines, keeping only vocabulary tokens.

    ``source`` is a path (plain or gzip) or a text stream. The first
    occurrence of a token wins. A first line of exactly two integers (the
    word2vec text header) is skipped.
    """
    fh, owned = _open_text(source)
    vectors = np.zeros((vocab.size, 0))
    present = np.zeros(vocab.size, dtype=bool)
    dim = None
    try:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                raise EmbeddingError(f"line {lineno}: no vector components")
            if dim is None:
                dim = len(parts) - 1
                vectors = np.zeros((vocab.size, dim))
            elif len(parts) - 1 != dim:
                raise EmbeddingError(
                    f"line {lineno}: dimension mismatch ({len(parts) - 1} != {dim})"
                )
            idx = vocab.index.get(parts[0])
            if idx is None or present[idx]:
                continue
            try:
                vectors[idx] = [float(x) for x in parts[1:]]
            except ValueError:
                raise EmbeddingError(f"line {lineno}: non-numeric vector component") from None
            present[idx] = True
    finally:
        if owned:
            fh.close()
    if not present.any():
        raise EmbeddingError("zero coverage: no vocabulary word has an embedding")
    return EmbeddingTable.from_array(vectors, vocab.words, present)


def save_embeddings(path, table):
    """Write the present vectors in the plain-text format (repr floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in np.flatnonzero(table.present):
            comps = " ".join(repr(float(x)) for x in table.vectors[i])
            fh.write(f"{table.words[i]} {comps}\n")


def euclidean(X, Y):
    """Pairwise Euclidean distances between rows of ``X`` and ``Y``.

    Computed from explicit differences, so identical rows give exactly zero
    and ``euclidean(X, Y) == euclidean(Y, X).T`` bit for bit.
    """
    return cdist(np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64))


def cost_matrix(A, B, table, ground_power=1):
    """Entry (i, j) is ||v(A_i) - v(B_j)||_2 ** ground_power."""
    if ground_power not in (1, 2):
        raise EmbeddingError("ground_power must be 1 or 2")
    A = table.check_ids(A)
    B = table.check_ids(B)
    D = euclidean(table.vectors[A], table.vectors[B])
    return D if ground_power == 1 else D * D
