"""Perturbation baselines that skip denoising."""

from ..core.rng import RngState
from ..core.tensor import Array
from ..model.vocab import TokenIds, VocabEmbeddingTable, nearest_tokens
from .mechanism import privatize


def tok_emb_priv_baseline(x: Array, eta: float, rng: RngState) -> Array:
    """Raw noisy token representations, no clipping."""

    return privatize(x, eta, rng)


def text2text_privatize(
    x: Array, vocab: VocabEmbeddingTable, eta: float, rng: RngState
) -> TokenIds:
    """Perturb every token representation and snap it to the nearest vocabulary token."""

    return nearest_tokens(privatize(x, eta, rng), vocab)
