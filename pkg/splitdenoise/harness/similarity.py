import logging
from typing import Sequence

import numpy as np
from scipy import stats

from ..exceptions import ContractError, EmptyInputError

log = logging.getLogger(__name__)

MAX_FEATURES = 5000


def token_frequencies(corpus: Sequence[Sequence[int]], size: int) -> np.ndarray:
    """Bag-of-words counts of every token id below `size`."""

    if not corpus:
        raise EmptyInputError("cannot count tokens of an empty corpus")
    ids = np.concatenate([np.asarray(sequence, dtype=np.int64) for sequence in corpus])
    return np.bincount(ids, minlength=size)


def corpus_similarity(
    corpus_a: Sequence[Sequence[int]],
    corpus_b: Sequence[Sequence[int]],
    max_features: int = MAX_FEATURES,
) -> float:
    """
    Spearman's rho between the token frequency ranks of two corpora over
    their most frequent shared tokens, ranked by pooled frequency. Ties get
    average ranks.
    """

    if not corpus_a or not corpus_b:
        raise EmptyInputError("both corpora must hold at least one sequence")
    size = 1 + max(max(max(seq, default=0) for seq in corpus) for corpus in (corpus_a, corpus_b))
    counts_a = token_frequencies(corpus_a, size)
    counts_b = token_frequencies(corpus_b, size)

    shared = np.flatnonzero((counts_a > 0) & (counts_b > 0))
    if shared.size < 2:
        raise ContractError(f"need at least 2 shared tokens, found {shared.size}")
    pooled = counts_a[shared] + counts_b[shared]
    order = np.lexsort((shared, -pooled))
    features = shared[order[: min(max_features, shared.size)]]

    a, b = counts_a[features], counts_b[features]
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ContractError("token frequencies are constant over the shared tokens")
    rho = float(stats.spearmanr(a, b).correlation)
    log.debug("Corpus similarity over %s shared tokens: %.4f", features.size, rho)
    return rho
