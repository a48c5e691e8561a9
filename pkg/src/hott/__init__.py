"""Hierarchical optimal topic transport (HOTT) and related document distances."""
__version__ = "0.1.0"

from .corpus import (
    Corpus,
    DocumentDistribution,
    RawDocument,
    Vocabulary,
    build_corpus,
    build_vocabulary,
    split_corpus,
    to_distribution,
    tokenize,
)
from .embeddings import EmbeddingTable, cost_matrix, load_embeddings
from .transport import (
    brute_force_reference,
    hausdorff,
    relaxed_cost,
    solve_exact,
    wasserstein,
)
from .topics import (
    LatentDirichletGibbs,
    TopicModel,
    fit_lda,
    infer_proportions,
    truncate_proportions,
    truncate_topic,
)
from .distances import (
    DistanceMatrix,
    TopicCostMatrix,
    hott,
    rwmd,
    topic_cost_matrix,
    wmd,
    wmd_truncated,
)
from .baselines import BowVectorizer, build_vectors, vector_distance
from .pairwise import DocumentDistance, Metric, pairwise_matrix
from .evaluation import (
    NearestNeighborVote,
    benchmark_throughput,
    check_bounds,
    frobenius_diff,
    knn_evaluate,
    mantel,
    normalized_aggregate,
)
