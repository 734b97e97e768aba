"""
Seeded synthetic corpora for the harness.

Token ids follow a bounded Zipf law over vocabulary ranks, id = rank - 1.
The downstream label marks sequences that hold any token of a signal set:
the window of consecutive ranks whose mass makes P(label = 1) closest to
one half at the configured sequence length. Signal rows of the vocabulary
table share a planted direction so the label is visible in mean-pooled
embeddings and fades under heavy noise.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..core.rng import RngState
from ..core.tensor import Array
from ..exceptions import ContractError
from ..model.encoder import EncoderWeights, init_toy_model
from ..model.vocab import VocabEmbeddingTable
from ..schemas.experiment import ExperimentConfig, LabelRule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticCorpus:
    sequences: List[List[int]]
    labels: Array

    def __len__(self) -> int:
        return len(self.sequences)

    def split(self, test_fraction: float) -> Tuple["SyntheticCorpus", "SyntheticCorpus"]:
        """Leading items for training, trailing items for testing."""

        test = min(max(1, int(round(len(self) * test_fraction))), len(self) - 1)
        cut = len(self) - test
        return (
            SyntheticCorpus(self.sequences[:cut], self.labels[:cut]),
            SyntheticCorpus(self.sequences[cut:], self.labels[cut:]),
        )


def zipf_probabilities(vocab_size: int, exponent: float) -> Array:
    ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
    weights = ranks**-exponent
    return weights / weights.sum()


def signal_window(probabilities: Array, count: int, seq_len: int) -> Array:
    """
    Ids of the `count` consecutive ranks whose total mass p gives
    1 - (1 - p)^seq_len closest to 1/2; the earliest window wins ties.
    """

    if not 0 < count < probabilities.shape[0]:
        raise ContractError(
            f"signal set of {count} tokens needs a larger vocabulary than {probabilities.shape[0]}"
        )
    cumulative = np.concatenate([[0.0], np.cumsum(probabilities)])
    mass = cumulative[count:] - cumulative[:-count]
    positive = 1.0 - (1.0 - np.clip(mass, 0.0, 1.0)) ** seq_len
    start = int(np.argmin(np.abs(positive - 0.5)))
    return np.arange(start, start + count)


def build_vocabulary(config: ExperimentConfig) -> Tuple[VocabEmbeddingTable, EncoderWeights, Array]:
    """
    The toy model for a scenario plus its signal token ids. Depends only on
    the model settings, never on the run seed.
    """

    table, encoder = init_toy_model(config.encoder_config())
    probabilities = zipf_probabilities(config.vocab_size, config.zipf_exponent)
    signal = signal_window(probabilities, config.signal_tokens, config.seq_len)

    direction = RngState(config.model_seed, (1,)).generator.standard_normal(config.dim)
    direction /= np.linalg.norm(direction)
    embeddings = table.embeddings.copy()
    embeddings[signal] += config.signal_strength * direction
    log.debug(
        "Signal tokens %s..%s carry a planted direction of strength %s",
        signal[0],
        signal[-1],
        config.signal_strength,
    )
    return VocabEmbeddingTable(embeddings), encoder, signal


def draw_corpus(
    config: ExperimentConfig,
    signal: Array,
    rng: RngState,
    size: int = 0,
    exponent: float = 0.0,
) -> SyntheticCorpus:
    """
    `size` sequences (`config.corpus_size` by default) of `config.seq_len`
    Zipf tokens with their labels. `exponent` overrides the Zipf exponent.
    """

    count = size or config.corpus_size
    probabilities = zipf_probabilities(config.vocab_size, exponent or config.zipf_exponent)
    ids = rng.generator.choice(config.vocab_size, size=(count, config.seq_len), p=probabilities)
    if config.label_rule == LabelRule.PRESENCE:
        labels = np.isin(ids, signal).any(axis=1).astype(np.float64)
    else:
        labels = rng.generator.integers(0, 2, size=count).astype(np.float64)
    log.debug("Drew %s sequences, %.3f labeled positive", count, labels.mean())
    return SyntheticCorpus(ids.tolist(), labels)
