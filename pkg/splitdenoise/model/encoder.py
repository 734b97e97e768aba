"""
The cloud encoder: a small pre-norm transformer encoder that maps an n x d
token matrix to a d-vector sentence embedding by mean pooling.

The server model is seeded once and frozen. `finetune_encoder` exists only
for the model-update drill and always returns a new frozen model.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.checkpoint import (
    load_checkpoint,
    pack_settings,
    save_checkpoint,
    unpack_settings,
)
from ..core.ops import (
    Mask,
    activation,
    layer_norm,
    masked_mean,
    mean_squared_error,
    multi_head_attention,
)
from ..core.params import ParameterStore, adam_step, backward, init_normal
from ..core.rng import RngState
from ..core.tensor import Array, Tensor
from ..exceptions import CheckpointError, ContractError, DimensionError, EmptyInputError
from ..schemas.model import EncoderConfig
from .vocab import VocabEmbeddingTable, embed_tokens

log = logging.getLogger(__name__)

POOLING_MODE = "mean"
CONFIG_PREFIX = "config."


class EmbeddingRole(str, Enum):
    CLEAN = "clean"
    NOISY = "noisy"
    DENOISED = "denoised"


@dataclass(frozen=True)
class SentenceEmbedding:
    """A sentence embedding and where it came from."""

    vector: Array
    role: EmbeddingRole
    pooling: str = POOLING_MODE

    def __post_init__(self) -> None:
        if self.vector.ndim != 1:
            raise DimensionError(
                f"sentence embedding must be 1-D, got {self.vector.shape}"
            )

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class EncoderWeights:
    """Frozen encoder parameters and the configuration that shaped them."""

    config: EncoderConfig
    store: ParameterStore
    positional: Array = field(repr=False)
    pooling: str = POOLING_MODE

    @classmethod
    def from_store(
        cls, config: EncoderConfig, store: ParameterStore
    ) -> "EncoderWeights":
        expected = encoder_shapes(config)
        actual = {name: tensor.shape for name, tensor in store.items()}
        if actual != expected:
            raise DimensionError(f"encoder parameters {actual} do not match {expected}")
        positional = sinusoidal_encodings(config.max_len, config.dim)
        if not config.positional:
            positional = np.zeros_like(positional)
        positional.setflags(write=False)
        return cls(config, store if store.frozen else store.copy().freeze(), positional)


def sinusoidal_encodings(length: int, dim: int) -> Array:
    """PE[p, 2i] = sin(p / 10000^(2i/d)), PE[p, 2i+1] = cos(p / 10000^(2i/d))."""

    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.power(10000.0, -np.arange(0, dim, 2, dtype=np.float64) / dim)
    encodings = np.zeros((length, dim))
    encodings[:, 0::2] = np.sin(positions * rates)
    encodings[:, 1::2] = np.cos(positions * rates)
    return encodings


def encoder_shapes(config: EncoderConfig) -> Dict[str, Tuple[int, ...]]:
    d, heads, d_kv, d_ff = config.dim, config.n_head, config.d_kv, config.d_ff
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer in range(config.layers):
        prefix = f"layer{layer}."
        shapes.update(
            {
                prefix + "ln1.gain": (d,),
                prefix + "ln1.bias": (d,),
                prefix + "attn.w_q": (heads, d, d_kv),
                prefix + "attn.w_k": (heads, d, d_kv),
                prefix + "attn.w_v": (heads, d, d_kv),
                prefix + "attn.w_o": (heads * d_kv, d),
                prefix + "ln2.gain": (d,),
                prefix + "ln2.bias": (d,),
                prefix + "ff.w_in": (d, d_ff),
                prefix + "ff.b_in": (d_ff,),
                prefix + "ff.w_out": (d_ff, d),
                prefix + "ff.b_out": (d,),
            }
        )
    return shapes


def init_toy_model(config: EncoderConfig) -> Tuple[VocabEmbeddingTable, EncoderWeights]:
    """
    Seeded vocabulary table and encoder. Table rows are N(0, 1/d); weights are
    N(0, init_std²), biases zero, layer-norm gains one.
    """

    rng = RngState(config.seed)
    scale = 1.0 / math.sqrt(config.dim)
    table = VocabEmbeddingTable(
        rng.generator.normal(0.0, scale, size=(config.vocab_size, config.dim))
    )
    store = ParameterStore()
    for name, shape in encoder_shapes(config).items():
        if name.endswith(".gain"):
            store.add(name, np.ones(shape))
        elif ".b_" in name or name.endswith(".bias"):
            store.add(name, np.zeros(shape))
        else:
            store.add(name, init_normal(rng, shape, config.init_std))
    log.debug(
        "Initialized toy model %s with %s encoder parameters", config.json(), store.size()
    )
    return table, EncoderWeights.from_store(config, store.freeze())


def encoder_forward(
    store: ParameterStore,
    config: EncoderConfig,
    positional: Array,
    x: Tensor,
    mask: Mask,
) -> Tensor:
    """Pre-norm encoder blocks over `x` (B, n, d), mean-pooled over valid positions."""

    h = x + Tensor(positional[: x.shape[-2]])
    for layer in range(config.layers):
        p = f"layer{layer}."
        normed = layer_norm(h, store[p + "ln1.gain"], store[p + "ln1.bias"])
        h = h + multi_head_attention(
            normed,
            store[p + "attn.w_q"],
            store[p + "attn.w_k"],
            store[p + "attn.w_v"],
            store[p + "attn.w_o"],
            config.n_head,
            mask,
        )
        normed = layer_norm(h, store[p + "ln2.gain"], store[p + "ln2.bias"])
        hidden = activation(normed @ store[p + "ff.w_in"] + store[p + "ff.b_in"])
        h = h + (hidden @ store[p + "ff.w_out"] + store[p + "ff.b_out"])
    return masked_mean(h, mask)


def _check_batch(x: Array, mask: Optional[Mask], w: EncoderWeights) -> Tuple[Array, Mask]:
    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 3:
        raise DimensionError(f"batched token matrices must be 3-D, got {values.shape}")
    if values.shape[0] == 0 or values.shape[1] == 0:
        raise EmptyInputError("cannot encode an empty token matrix")
    if values.shape[2] != w.config.dim:
        raise DimensionError(
            f"token matrix width {values.shape[2]} differs from model width {w.config.dim}"
        )
    if values.shape[1] > w.config.max_len:
        raise ContractError(
            f"{values.shape[1]} tokens exceed the limit of {w.config.max_len}"
        )
    if mask is None:
        valid = np.ones(values.shape[:2], dtype=bool)
    else:
        valid = np.asarray(mask, dtype=bool)
    if valid.shape != values.shape[:2]:
        raise DimensionError(f"mask shape {valid.shape} differs from {values.shape[:2]}")
    return values, valid


def encode_batch(x: Array, w: EncoderWeights, mask: Optional[Mask] = None) -> Array:
    """
    Sentence embeddings for a padded batch `x` (B, n, d); `mask` (B, n) marks
    real tokens. Every embedding the system computes goes through here.
    """

    values, valid = _check_batch(x, mask, w)
    return encoder_forward(w.store, w.config, w.positional, Tensor(values), valid).data


def encode(
    x: Array, w: EncoderWeights, role: EmbeddingRole = EmbeddingRole.CLEAN
) -> SentenceEmbedding:
    """The sentence embedding of one n x d token matrix."""

    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionError(f"token matrix must be 2-D, got {values.shape}")
    return SentenceEmbedding(encode_batch(values[None], w)[0], role, w.pooling)


def pad_sequences(
    matrices: Sequence[Array], length: Optional[int] = None
) -> Tuple[Array, Mask]:
    """
    Stack variable-length n x d matrices into a zero-padded batch and its mask,
    padded to `length` rows or to the longest matrix.
    """

    if not matrices:
        raise EmptyInputError("cannot pad an empty batch")
    width = matrices[0].shape[1]
    longest = max(matrix.shape[0] for matrix in matrices)
    if length is not None:
        if length < longest:
            raise DimensionError(f"cannot pad {longest} rows to {length}")
        longest = length
    batch = np.zeros((len(matrices), longest, width))
    mask = np.zeros((len(matrices), longest), dtype=bool)
    for row, matrix in enumerate(matrices):
        batch[row, : matrix.shape[0]] = matrix
        mask[row, : matrix.shape[0]] = True
    return batch, mask


def encode_sequences(
    sequences: Sequence[Sequence[int]],
    table: VocabEmbeddingTable,
    w: EncoderWeights,
    batch_size: int = 256,
) -> Array:
    """Clean sentence embeddings of token-id sequences, G(X) for every sequence."""

    outputs: List[Array] = []
    for start in range(0, len(sequences), batch_size):
        chunk = [embed_tokens(ids, table) for ids in sequences[start : start + batch_size]]
        batch, mask = pad_sequences(chunk)
        outputs.append(encode_batch(batch, w, mask))
    if not outputs:
        raise EmptyInputError("no sequences to encode")
    return np.concatenate(outputs, axis=0)


def finetune_encoder(
    weights: EncoderWeights,
    table: VocabEmbeddingTable,
    corpus: Sequence[Sequence[int]],
    drift: float,
    steps: int,
    lr: float,
    rng: RngState,
    batch_size: int = 32,
) -> EncoderWeights:
    """
    Train a copy of the encoder toward a drifted target e + drift·(A e), with A
    a random d x d map, to simulate a server-side model update.
    """

    if not corpus:
        raise EmptyInputError("cannot finetune on an empty corpus")
    d = weights.config.dim
    mixing = rng.generator.normal(0.0, 1.0 / math.sqrt(d), size=(d, d))
    before = encode_sequences(corpus, table, weights)
    targets = before + drift * before @ mixing.T

    store = weights.store.copy()
    for step in range(steps):
        rows = rng.generator.choice(len(corpus), size=min(batch_size, len(corpus)), replace=False)
        batch, mask = pad_sequences([embed_tokens(corpus[i], table) for i in rows])
        prediction = encoder_forward(
            store, weights.config, weights.positional, Tensor(batch), mask
        )
        loss = mean_squared_error(prediction, Tensor(targets[rows]))
        backward(loss, store)
        adam_step(store, lr)
        if step % 50 == 0:
            log.debug("encoder update step %s: loss %.6f", step, loss.item())

    log.info("Encoder updated for %s steps with drift %s", steps, drift)
    return EncoderWeights.from_store(weights.config, store.freeze())


def save_encoder(path: Union[str, Path], weights: EncoderWeights) -> None:
    tensors = pack_settings(CONFIG_PREFIX, weights.config.dict())
    tensors.update({name: tensor.data for name, tensor in weights.store.items()})
    save_checkpoint(path, tensors)


def load_encoder(path: Union[str, Path]) -> EncoderWeights:
    tensors = load_checkpoint(path)
    settings = unpack_settings(tensors, CONFIG_PREFIX)
    missing = set(EncoderConfig.__fields__) - set(settings)
    if missing:
        raise CheckpointError(f"{path} is not an encoder checkpoint: missing {sorted(missing)}")
    try:
        config = EncoderConfig(**settings)
    except ValueError as err:
        raise CheckpointError(f"{path} holds an invalid encoder configuration: {err}") from err
    return EncoderWeights.from_store(config, ParameterStore(tensors).freeze())

