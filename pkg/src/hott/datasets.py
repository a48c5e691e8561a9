"""Synthetic labeled corpora with planted topics and clustered word embeddings."""
import numpy as np

from .corpus import Corpus, DocumentDistribution, Vocabulary
from .embeddings import EmbeddingTable

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def word_name(i, width=3):
    """Alphabetic token for integer ``i`` (tokenizer-safe)."""
    chars = []
    for _ in range(width):
        i, r = divmod(i, 26)
        chars.append(_LETTERS[r])
    return "w" + "".join(reversed(chars))


def _docs_from_counts(counts):
    return tuple(DocumentDistribution.from_counts(np.flatnonzero(c), c[c > 0]) for c in counts)


def make_topic_corpus(n_docs=120, n_classes=4, words_per_group=15, doc_length=40,
                      purity=0.85, dim=10, spread=0.15, seed=0):
    """Labeled corpus where class ``c`` draws mostly from word group ``c``.

    Each group's words are embedded around a common random center, so word
    groups are both topics and geometric clusters. Returns (corpus, table).
    """
    rng = np.random.default_rng(seed)
    V = n_classes * words_per_group
    vocab = Vocabulary.from_words(word_name(i) for i in range(V))
    group = np.repeat(np.arange(n_classes), words_per_group)
    centers = rng.normal(size=(n_classes, dim))
    vectors = centers[group] + spread * rng.normal(size=(V, dim))
    table = EmbeddingTable.from_array(vectors, vocab.words)

    labels = rng.integers(0, n_classes, size=n_docs)
    counts = np.zeros((n_docs, V), dtype=np.int64)
    for d, c in enumerate(labels):
        within = rng.dirichlet(np.ones(words_per_group))
        p = np.full(V, (1 - purity) / (V - words_per_group))
        p[group == c] = purity * within
        counts[d] = rng.multinomial(doc_length, p / p.sum())
    corpus = Corpus(vocab, _docs_from_counts(counts),
                    tuple(f"class{c}" for c in labels), tuple(f"doc{d}" for d in range(n_docs)))
    return corpus, table


def make_planted_corpus(n_docs=200, doc_length=50, half=10, seed=0):
    """Two planted topics on disjoint vocabulary halves, Dirichlet(1) proportions.

    Returns (corpus, true_topic_word) with true topics of shape (2, 2 * half).
    """
    rng = np.random.default_rng(seed)
    V = 2 * half
    true = np.zeros((2, V))
    true[0, :half] = rng.dirichlet(np.ones(half))
    true[1, half:] = rng.dirichlet(np.ones(half))
    counts = np.zeros((n_docs, V), dtype=np.int64)
    for d in range(n_docs):
        theta = rng.dirichlet(np.ones(2))
        counts[d] = rng.multinomial(doc_length, theta @ true)
    vocab = Vocabulary.from_words(word_name(i) for i in range(V))
    labels = tuple("topic0" if c[:half].sum() >= c[half:].sum() else "topic1" for c in counts)
    keep = counts.sum(axis=1) > 0
    corpus = Corpus(vocab, _docs_from_counts(counts[keep]),
                    tuple(l for l, k in zip(labels, keep) if k))
    return corpus, true


def make_long_corpus(n_docs=6, vocab_size=1500, unique_words=500, n_classes=2, dim=20, seed=0):
    """Documents with at least ``unique_words`` distinct words each.

    Each document covers a random set of ``unique_words`` words (once each)
    plus extra tokens concentrated on its class's half of the vocabulary.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.from_words(word_name(i) for i in range(vocab_size))
    group = np.arange(vocab_size) * n_classes // vocab_size
    centers = rng.normal(size=(n_classes, dim))
    vectors = centers[group] + 0.5 * rng.normal(size=(vocab_size, dim))
    table = EmbeddingTable.from_array(vectors, vocab.words)
    counts = np.zeros((n_docs, vocab_size), dtype=np.int64)
    labels = []
    for d in range(n_docs):
        c = d % n_classes
        labels.append(f"class{c}")
        counts[d, rng.choice(vocab_size, unique_words, replace=False)] += 1
        own = np.flatnonzero(group == c)
        p = np.zeros(vocab_size)
        p[own] = rng.dirichlet(np.ones(own.size))
        counts[d] += rng.multinomial(2 * unique_words, p)
    corpus = Corpus(vocab, _docs_from_counts(counts), tuple(labels))
    return corpus, table


def write_corpus_text(path, corpus):
    """Write ``label<TAB>text`` lines reproducing each document's counts."""
    with open(path, "w", encoding="utf-8") as fh:
        for label, doc in zip(corpus.labels, corpus.documents):
            tokens = []
            for w, c in zip(doc.support, doc.counts):
                tokens.extend([corpus.vocabulary.words[w]] * int(c))
            fh.write(f"{label}\t{' '.join(tokens)}\n")
