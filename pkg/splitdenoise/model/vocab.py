"""The local encoder: token-representation lookup and its inverse."""

from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from ..core.tensor import Array
from ..exceptions import (
    DimensionError,
    EmptyInputError,
    EmptyVocabularyError,
    NonFiniteError,
    TokenRangeError,
)

TokenIds = npt.NDArray[np.int64]

NEAREST_CHUNK = 64


class VocabEmbeddingTable:
    """A read-only |V| x d table of token representations."""

    def __init__(self, embeddings: Array) -> None:
        values = np.array(embeddings, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"vocabulary table must be 2-D, got shape {values.shape}")
        if values.shape[0] == 0:
            raise EmptyVocabularyError("vocabulary table has no rows")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("vocabulary table holds NaN or Inf")
        values.setflags(write=False)
        self.embeddings = values

    @property
    def vocab_size(self) -> int:
        return int(self.embeddings.shape[0])

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    def row_norms(self) -> Array:
        return np.sqrt((self.embeddings * self.embeddings).sum(axis=1))

    def scaled(self, factor: float) -> "VocabEmbeddingTable":
        return VocabEmbeddingTable(self.embeddings * factor)

    def __repr__(self) -> str:
        return f"VocabEmbeddingTable(vocab_size={self.vocab_size}, dim={self.dim})"


def as_token_ids(ids: Union[Sequence[int], TokenIds]) -> TokenIds:
    values = np.asarray(ids)
    if values.size and not np.issubdtype(values.dtype, np.integer):
        raise TokenRangeError(f"token ids must be integers, got {values.dtype}")
    return values.astype(np.int64).reshape(-1)


def embed_tokens(ids: Union[Sequence[int], TokenIds], table: VocabEmbeddingTable) -> Array:
    """Row t of the result is the table row of ids[t]."""

    token_ids = as_token_ids(ids)
    if token_ids.size == 0:
        raise EmptyInputError("cannot embed an empty token sequence")
    if token_ids.min() < 0 or token_ids.max() >= table.vocab_size:
        raise TokenRangeError(
            f"token ids must lie in [0, {table.vocab_size}), "
            f"got range [{token_ids.min()}, {token_ids.max()}]"
        )
    return table.embeddings[token_ids].copy()


def nearest_tokens(points: Array, table: VocabEmbeddingTable) -> TokenIds:
    """
    Exact Euclidean nearest vocabulary row for every point; the lowest token id
    wins ties.
    """

    values = np.asarray(points, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[-1] != table.dim:
        raise DimensionError(
            f"points have width {values.shape[-1]}, vocabulary has width {table.dim}"
        )

    found = np.empty(values.shape[0], dtype=np.int64)
    for start in range(0, values.shape[0], NEAREST_CHUNK):
        chunk = values[start : start + NEAREST_CHUNK]
        diff = chunk[:, None, :] - table.embeddings[None, :, :]
        # argmin returns the first minimum, i.e. the lowest id
        found[start : start + len(chunk)] = np.argmin((diff * diff).sum(axis=-1), axis=1)
    return found
