"""
The client-side denoiser.

Input assembly stacks the noisy sentence embedding, the privatized token rows
and the noise rows into one sequence

    H0 = [e_n; x̃_1 .. x̃_n; z_1 .. z_n]

and adds a segment embedding (0 for e_n, 1 for x̃, 2 for z) and a learned
position embedding, both zero at initialization. Every layer then computes

    a = attention(h)                      full, bidirectional, padding masked
    m = W_proj GELU(W_fc LN(a + h) + b_fc) + b_proj
    h = h + a + m

and the denoised embedding is the final hidden state at position 0.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..core.ops import Mask, activation, layer_norm, multi_head_attention
from ..core.params import ParameterStore, init_normal
from ..core.rng import RngState
from ..core.tensor import Array, Tensor
from ..exceptions import ContractError, DimensionError, EmptyInputError
from ..model.encoder import EmbeddingRole, SentenceEmbedding
from ..schemas.denoiser import DenoiserConfig

log = logging.getLogger(__name__)

SEGMENT_EMBEDDING = 0
SEGMENT_TOKENS = 1
SEGMENT_NOISE = 2
SEGMENT_COUNT = 3


@dataclass(frozen=True)
class DenoiserWeights:
    """Trained, frozen denoiser parameters and their configuration."""

    config: DenoiserConfig
    store: ParameterStore

    @classmethod
    def from_store(
        cls, config: DenoiserConfig, store: ParameterStore
    ) -> "DenoiserWeights":
        expected = denoiser_shapes(config)
        actual = {name: tensor.shape for name, tensor in store.items()}
        if actual != expected:
            raise DimensionError(f"denoiser parameters {actual} do not match {expected}")
        return cls(config, store if store.frozen else store.copy().freeze())


def denoiser_shapes(config: DenoiserConfig) -> Dict[str, Tuple[int, ...]]:
    d, heads, d_kv, d_ff = config.d_model, config.n_head, config.d_kv, config.d_ff
    shapes: Dict[str, Tuple[int, ...]] = {
        "segment": (SEGMENT_COUNT, d),
        "position": (2 * config.max_len + 1, d),
    }
    for layer in range(config.layers):
        prefix = f"layer{layer}."
        shapes.update(
            {
                prefix + "attn.w_q": (heads, d, d_kv),
                prefix + "attn.w_k": (heads, d, d_kv),
                prefix + "attn.w_v": (heads, d, d_kv),
                prefix + "attn.w_o": (heads * d_kv, d),
                prefix + "ln.gain": (d,),
                prefix + "ln.bias": (d,),
                prefix + "ff.w_fc": (d, d_ff),
                prefix + "ff.b_fc": (d_ff,),
                prefix + "ff.w_proj": (d_ff, d),
                prefix + "ff.b_proj": (d,),
            }
        )
    return shapes


def init_denoiser_store(config: DenoiserConfig, rng: RngState) -> ParameterStore:
    """A trainable store: segment and position embeddings zero, weights N(0, init_std²)."""

    store = ParameterStore()
    for name, shape in denoiser_shapes(config).items():
        if name in ("segment", "position") or ".b_" in name or name.endswith(".bias"):
            store.add(name, np.zeros(shape))
        elif name.endswith(".gain"):
            store.add(name, np.ones(shape))
        else:
            store.add(name, init_normal(rng, shape, config.init_std))
    return store


def init_denoiser(config: DenoiserConfig) -> DenoiserWeights:
    return DenoiserWeights.from_store(
        config, init_denoiser_store(config, RngState(config.seed)).freeze()
    )


def _token_lengths(mask: Mask, rows: int, width: int) -> Array:
    valid = np.asarray(mask, dtype=bool)
    if valid.shape != (rows, width):
        raise DimensionError(f"token mask shape {valid.shape} differs from {(rows, width)}")
    lengths = valid.sum(axis=1)
    prefix = np.arange(width)[None, :] < lengths[:, None]
    if not np.array_equal(valid, prefix):
        raise ContractError("token masks must mark a leading run of real rows")
    if np.any(lengths == 0):
        raise EmptyInputError("every item needs at least one token")
    return lengths


def assemble_input(
    store: ParameterStore,
    config: DenoiserConfig,
    e_n: Array,
    x_tilde: Array,
    z: Array,
    mask: Optional[Mask] = None,
) -> Tuple[Tensor, Mask]:
    """
    H0 for a padded batch: `e_n` (B, d), `x_tilde` and `z` (B, n, d), `mask`
    (B, n) marking real token rows. Item b with n_b tokens occupies positions
    0..2·n_b exactly as it would alone; the returned (B, 2n+1) mask covers them.
    """

    if x_tilde.shape != z.shape:
        raise DimensionError(
            f"privatized tokens {x_tilde.shape} and noise {z.shape} differ in shape"
        )
    if x_tilde.ndim != 3 or e_n.shape != (x_tilde.shape[0], x_tilde.shape[2]):
        raise DimensionError(
            f"expected e_n (B, d) and tokens (B, n, d), got {e_n.shape} and {x_tilde.shape}"
        )
    rows, width, d = x_tilde.shape
    if d != config.d_model:
        raise DimensionError(f"input width {d} differs from d_model {config.d_model}")
    if width > config.max_len:
        raise ContractError(f"{width} tokens exceed the denoiser limit of {config.max_len}")
    if mask is None:
        mask = np.ones((rows, width), dtype=bool)
    lengths = _token_lengths(mask, rows, width)

    seq = 2 * width + 1
    base = np.zeros((rows, seq, d))
    segments = np.full((rows, seq), SEGMENT_EMBEDDING)
    valid = np.zeros((rows, seq), dtype=bool)
    base[:, 0] = e_n
    for row, length in enumerate(lengths):
        base[row, 1 : 1 + length] = x_tilde[row, :length]
        segments[row, 1 : 1 + length] = SEGMENT_TOKENS
        if config.include_noise:
            base[row, 1 + length : 1 + 2 * length] = z[row, :length]
        segments[row, 1 + length : 1 + 2 * length] = SEGMENT_NOISE
        valid[row, : 1 + 2 * length] = True

    h0 = Tensor(base) + store["segment"][segments] + store["position"][:seq]
    return h0, valid


def denoiser_forward(
    store: ParameterStore, config: DenoiserConfig, h0: Tensor, mask: Mask
) -> Tensor:
    """Run every layer over `h0` (B, s, d) and read out position 0 as (B, d)."""

    h = h0
    for layer in range(config.layers):
        p = f"layer{layer}."
        attended = multi_head_attention(
            h,
            store[p + "attn.w_q"],
            store[p + "attn.w_k"],
            store[p + "attn.w_v"],
            store[p + "attn.w_o"],
            config.n_head,
            mask,
        )
        normed = layer_norm(attended + h, store[p + "ln.gain"], store[p + "ln.bias"])
        hidden = activation(normed @ store[p + "ff.w_fc"] + store[p + "ff.b_fc"])
        h = h + attended + (hidden @ store[p + "ff.w_proj"] + store[p + "ff.b_proj"])
    return h[:, 0, :]


def _vector(e_n: Union[SentenceEmbedding, Array]) -> Array:
    if isinstance(e_n, SentenceEmbedding):
        return e_n.vector
    return np.asarray(e_n, dtype=np.float64)


def build_input(
    e_n: Union[SentenceEmbedding, Array],
    x_tilde: Array,
    z: Array,
    weights: DenoiserWeights,
) -> Tensor:
    """H0 for one item: a (2n+1) x d tensor."""

    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x_tilde.shape != z.shape or x_tilde.ndim != 2:
        raise DimensionError(
            f"privatized tokens {x_tilde.shape} and noise {z.shape} must share an n x d shape"
        )
    if x_tilde.shape[0] == 0:
        raise EmptyInputError("cannot denoise an empty token matrix")
    h0, _ = assemble_input(
        weights.store, weights.config, _vector(e_n)[None], x_tilde[None], z[None]
    )
    return h0[0]


def denoise_forward(
    h0: Tensor, weights: DenoiserWeights, mask: Optional[Mask] = None
) -> SentenceEmbedding:
    """The denoised embedding e_d of one assembled (s, d) input."""

    if h0.ndim != 2 or h0.shape[1] != weights.config.d_model:
        raise DimensionError(
            f"expected an (s, {weights.config.d_model}) input, got {h0.shape}"
        )
    valid = np.ones(h0.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if valid.shape != (h0.shape[0],):
        raise DimensionError(f"mask shape {valid.shape} differs from {(h0.shape[0],)}")
    out = denoiser_forward(
        weights.store, weights.config, h0.reshape(1, *h0.shape), valid[None]
    )
    return SentenceEmbedding(out.data[0], EmbeddingRole.DENOISED)


def denoise_batch(
    weights: DenoiserWeights,
    e_n: Array,
    x_tilde: Array,
    z: Array,
    mask: Optional[Mask] = None,
) -> Array:
    """Denoised embeddings (B, d) for a padded batch."""

    h0, valid = assemble_input(weights.store, weights.config, e_n, x_tilde, z, mask)
    return denoiser_forward(weights.store, weights.config, h0, valid).data


def denoise(
    e_n: Union[SentenceEmbedding, Array],
    x_tilde: Array,
    z: Array,
    weights: DenoiserWeights,
) -> SentenceEmbedding:
    """The client's single-sequence entry point: e_d = D(e_n, X̃, Z)."""

    return denoise_forward(build_input(e_n, x_tilde, z, weights), weights)
