# pylint: disable=redefined-outer-name

from pathlib import Path
from typing import Generator, Tuple

import numpy as np
import pytest

from splitdenoise.core import RngState, Tensor, activation, layer_norm, multi_head_attention
from splitdenoise.exceptions import (
    ContractError,
    DimensionError,
    EmptyInputError,
    TokenRangeError,
)
from splitdenoise.model import (
    EmbeddingRole,
    EncoderWeights,
    VocabEmbeddingTable,
    embed_tokens,
    encode,
    encode_batch,
    encode_sequences,
    finetune_encoder,
    init_toy_model,
    load_encoder,
    nearest_tokens,
    save_encoder,
)
from splitdenoise.model.encoder import sinusoidal_encodings
from splitdenoise.schemas import EncoderConfig


@pytest.fixture()
def toy_model() -> Generator:
    """
    Yield a small seeded vocabulary table and one-layer encoder.
    """

    yield init_toy_model(EncoderConfig(vocab_size=50, dim=8, layers=1, n_head=2, d_kv=4, d_ff=16, seed=3))


@pytest.fixture()
def tokens(toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> Generator:
    """
    Yield a 5 x 8 token matrix for ids [1, 7, 7, 30, 2].
    """

    table, _ = toy_model
    yield embed_tokens([1, 7, 7, 30, 2], table)


class TestEmbedTokens:
    def test_first_row(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        table, _ = toy_model
        assert np.array_equal(embed_tokens([0], table), table.embeddings[:1])

    def test_repeated_ids(self, tokens: np.ndarray) -> None:
        assert np.array_equal(tokens[1], tokens[2])
        assert tokens.shape == (5, 8)

    def test_out_of_range(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        table, _ = toy_model
        with pytest.raises(TokenRangeError):
            embed_tokens([3, 50], table)
        with pytest.raises(TokenRangeError):
            embed_tokens([-1], table)

    def test_empty_sequence(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        table, _ = toy_model
        with pytest.raises(EmptyInputError):
            embed_tokens([], table)


class TestNearestTokens:
    def test_tie_goes_to_lowest_id(self) -> None:
        table = VocabEmbeddingTable(np.array([[2.0, 0.0], [0.0, 0.0], [1.0, 5.0]]))
        assert nearest_tokens(np.array([[1.0, 0.0]]), table).tolist() == [0]

    def test_exact_rows_map_to_themselves(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]
    ) -> None:
        table, _ = toy_model
        ids = np.arange(table.vocab_size)
        assert np.array_equal(nearest_tokens(table.embeddings, table), ids)

    def test_width_mismatch(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        table, _ = toy_model
        with pytest.raises(DimensionError):
            nearest_tokens(np.zeros((2, 3)), table)


class TestEncode:
    def test_pooling_only(self) -> None:
        """Without layers or positional encodings the embedding is the row mean."""

        table, weights = init_toy_model(EncoderConfig(vocab_size=20, dim=4, layers=0, positional=False))
        x = embed_tokens([3, 1, 4, 1, 5], table)
        assert np.allclose(encode(x, weights).vector, x.mean(axis=0), rtol=0, atol=1e-14)

    def test_deterministic(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights], tokens: np.ndarray
    ) -> None:
        _, weights = toy_model
        assert np.array_equal(encode(tokens, weights).vector, encode(tokens, weights).vector)

    def test_single_token_composition(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]
    ) -> None:
        table, weights = toy_model
        x = embed_tokens([9], table)
        p = {name: tensor for name, tensor in weights.store.items()}

        h = Tensor(x + sinusoidal_encodings(1, 8))
        normed = layer_norm(h, p["layer0.ln1.gain"], p["layer0.ln1.bias"])
        h = h + multi_head_attention(
            normed,
            p["layer0.attn.w_q"],
            p["layer0.attn.w_k"],
            p["layer0.attn.w_v"],
            p["layer0.attn.w_o"],
            n_head=2,
        )
        normed = layer_norm(h, p["layer0.ln2.gain"], p["layer0.ln2.bias"])
        hidden = activation(normed @ p["layer0.ff.w_in"] + p["layer0.ff.b_in"])
        h = h + hidden @ p["layer0.ff.w_out"] + p["layer0.ff.b_out"]

        assert np.max(np.abs(encode(x, weights).vector - h.data[0])) < 1e-12

    def test_encode_is_a_batch_of_one(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights], tokens: np.ndarray
    ) -> None:
        _, weights = toy_model
        embedding = encode(tokens, weights, EmbeddingRole.NOISY)
        assert embedding.role == EmbeddingRole.NOISY
        assert embedding.pooling == "mean"
        assert np.array_equal(embedding.vector, encode_batch(tokens[None], weights)[0])

    def test_padded_batch_matches_single(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]
    ) -> None:
        table, weights = toy_model
        sequences = [[1, 2, 3], [4, 5, 6, 7, 8, 9], [10]]
        batched = encode_sequences(sequences, table, weights)
        for row, ids in enumerate(sequences):
            single = encode(embed_tokens(ids, table), weights).vector
            assert np.allclose(batched[row], single, rtol=0, atol=1e-12)

    def test_permutation_invariant_without_positions(self) -> None:
        table, weights = init_toy_model(
            EncoderConfig(vocab_size=30, dim=8, layers=1, n_head=2, d_kv=4, positional=False)
        )
        x = embed_tokens([1, 2, 3, 4], table)
        shuffled = x[[2, 0, 3, 1]]
        assert np.allclose(encode(x, weights).vector, encode(shuffled, weights).vector, atol=1e-12)

    def test_transposition_changes_output_with_positions(
        self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]
    ) -> None:
        table, weights = toy_model
        generator = np.random.default_rng(0)
        for _ in range(5):
            ids = generator.choice(table.vocab_size, size=6, replace=False)
            swapped = ids.copy()
            swapped[[0, 1]] = swapped[[1, 0]]
            first = encode(embed_tokens(ids, table), weights).vector
            second = encode(embed_tokens(swapped, table), weights).vector
            assert not np.allclose(first, second, rtol=0, atol=1e-10)

    def test_width_mismatch(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        _, weights = toy_model
        with pytest.raises(DimensionError):
            encode(np.zeros((3, 5)), weights)

    def test_too_long(self) -> None:
        _, weights = init_toy_model(EncoderConfig(vocab_size=10, dim=4, layers=0, max_len=4))
        with pytest.raises(ContractError):
            encode(np.zeros((5, 4)), weights)

    def test_empty(self, toy_model: Tuple[VocabEmbeddingTable, EncoderWeights]) -> None:
        _, weights = toy_model
        with pytest.raises(EmptyInputError):
            encode(np.zeros((0, 8)), weights)


class TestInitToyModel:
    def test_same_seed_same_weights(self) -> None:
        config = EncoderConfig(vocab_size=40, dim=8, seed=5)
        first_table, first = init_toy_model(config)
        second_table, second = init_toy_model(config)
        assert np.array_equal(first_table.embeddings, second_table.embeddings)
        for name, tensor in first.store.items():
            assert np.array_equal(tensor.data, second.store[name].data)

    def test_default_sizes(self) -> None:
        table, weights = init_toy_model(EncoderConfig(vocab_size=1000, dim=32))
        assert table.embeddings.shape == (1000, 32)
        assert weights.store.frozen

    def test_different_seeds_differ(self) -> None:
        first, _ = init_toy_model(EncoderConfig(vocab_size=40, dim=8, seed=1))
        second, _ = init_toy_model(EncoderConfig(vocab_size=40, dim=8, seed=2))
        assert not np.array_equal(first.embeddings, second.embeddings)


class TestEncoderPersistence:
    def test_round_trip(
        self,
        tmp_path: Path,
        toy_model: Tuple[VocabEmbeddingTable, EncoderWeights],
        tokens: np.ndarray,
    ) -> None:
        _, weights = toy_model
        path = tmp_path / "encoder.sndw"
        save_encoder(path, weights)
        loaded = load_encoder(path)
        assert loaded.config == weights.config
        assert np.array_equal(encode(tokens, loaded).vector, encode(tokens, weights).vector)

    def test_finetune_returns_new_frozen_model(
        self,
        toy_model: Tuple[VocabEmbeddingTable, EncoderWeights],
        tokens: np.ndarray,
    ) -> None:
        table, weights = toy_model
        before = encode(tokens, weights).vector
        corpus = [[1, 2, 3, 4], [5, 6, 7], [8, 9, 10, 11, 12]]
        updated = finetune_encoder(weights, table, corpus, drift=0.5, steps=5, lr=1e-2, rng=RngState(0))

        assert updated.store.frozen
        assert np.array_equal(encode(tokens, weights).vector, before)
        assert not np.allclose(encode(tokens, updated).vector, before)
