import gzip
import io
import math

import numpy as np
import pytest

from hott.corpus import Vocabulary
from hott.embeddings import (
    EmbeddingError,
    EmbeddingTable,
    cost_matrix,
    euclidean,
    load_embeddings,
    save_embeddings,
)


def _vocab(*words):
    return Vocabulary.from_words(words)


def test_load_examples():
    table = load_embeddings(io.StringIO("a 1 0\nb 0 1\n"), _vocab("a", "b"))
    assert table.dimension == 2
    assert table.coverage == 1.0
    with pytest.raises(EmbeddingError, match="line 2: dimension mismatch"):
        load_embeddings(io.StringIO("a 1 0\nb 0 1 2\n"), _vocab("a", "b"))
    table = load_embeddings(io.StringIO("a 1 0\na 9 9\n"), _vocab("a"))
    assert table.vectors[0].tolist() == [1.0, 0.0]


def test_load_partial_coverage_header_and_errors(tmp_path):
    text = "3 2\nzz 5 5\nb 0.5 -1e-3\n"
    table = load_embeddings(io.StringIO(text), _vocab("a", "b"))
    assert table.present.tolist() == [False, True]
    assert table.coverage == 0.5
    assert table.vectors[1].tolist() == [0.5, -1e-3]
    assert 1 in table and 0 not in table
    with pytest.raises(EmbeddingError, match="'a'"):
        table.check_ids([1, 0])
    with pytest.raises(EmbeddingError, match="zero coverage"):
        load_embeddings(io.StringIO("zz 1 2\n"), _vocab("a"))
    with pytest.raises(EmbeddingError, match="non-numeric"):
        load_embeddings(io.StringIO("a 1 x\n"), _vocab("a"))


def test_gzip_and_plain_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    vocab = _vocab("a", "b", "c")
    table = EmbeddingTable.from_array(rng.normal(size=(3, 4)), vocab.words)
    plain = tmp_path / "v.txt"
    save_embeddings(plain, table)
    packed = tmp_path / "v.txt.gz"
    with gzip.open(packed, "wb") as fh:
        fh.write(plain.read_bytes())
    for path in (plain, packed):
        back = load_embeddings(path, vocab)
        assert np.array_equal(back.vectors, table.vectors)


def test_cost_matrix_examples():
    table = EmbeddingTable.from_array([[0.0, 0.0], [3.0, 4.0]], ("a", "b"))
    assert cost_matrix([0], [0], table).tolist() == [[0.0]]
    assert cost_matrix([0], [1], table, 1)[0, 0] == 5.0
    assert cost_matrix([0], [1], table, 2)[0, 0] == 25.0
    with pytest.raises(EmbeddingError):
        cost_matrix([0], [1], table, 3)


def test_cost_matrix_matches_double_loop(rng):
    table = EmbeddingTable.from_array(rng.normal(size=(20, 6)))
    A = rng.choice(20, 5, replace=False)
    B = rng.choice(20, 7, replace=False)
    for power in (1, 2):
        C = cost_matrix(A, B, table, power)
        assert C.shape == (5, 7)
        for i, a in enumerate(A):
            for j, b in enumerate(B):
                d = math.sqrt(sum((x - y) ** 2 for x, y in zip(table.vectors[a], table.vectors[b])))
                assert abs(C[i, j] - d ** power) <= 1e-12


def test_euclidean_is_a_metric(rng):
    X = rng.normal(size=(15, 3))
    D = euclidean(X, X)
    assert np.all(np.diag(D) == 0.0)
    assert np.array_equal(D, D.T)
    # triangle inequality on every triple
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-12)
    Y = rng.normal(size=(4, 3))
    assert np.array_equal(euclidean(X, Y), euclidean(Y, X).T)
