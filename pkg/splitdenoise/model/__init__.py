"""The split language model: local token lookup and the cloud encoder."""

from .encoder import (
    EmbeddingRole,
    EncoderWeights,
    SentenceEmbedding,
    encode,
    encode_batch,
    encode_sequences,
    finetune_encoder,
    init_toy_model,
    load_encoder,
    pad_sequences,
    save_encoder,
)
from .vocab import TokenIds, VocabEmbeddingTable, embed_tokens, nearest_tokens

__all__ = [
    "EmbeddingRole",
    "EncoderWeights",
    "SentenceEmbedding",
    "TokenIds",
    "VocabEmbeddingTable",
    "embed_tokens",
    "encode",
    "encode_batch",
    "encode_sequences",
    "finetune_encoder",
    "init_toy_model",
    "load_encoder",
    "nearest_tokens",
    "pad_sequences",
    "save_encoder",
]
