# pylint: disable=redefined-outer-name

import math
from typing import Generator

import numpy as np
import pytest
from scipy import stats

from splitdenoise.core import RngState
from splitdenoise.model import VocabEmbeddingTable
from splitdenoise.privacy import (
    INFINITE_ETA,
    ClipBound,
    clip_privatized,
    effective_noise,
    log_density_ratio,
    privatization_correlation,
    privatize,
    sample_noise,
    sample_noise_matrix,
    server_mse_lower_bound,
    text2text_privatize,
    tok_emb_priv_baseline,
)
from splitdenoise.exceptions import PrivacyParameterError, UndefinedBoundError


@pytest.fixture()
def tokens() -> Generator:
    """
    Yield a 12 x 8 clean token matrix.
    """

    yield np.random.default_rng(11).normal(0.0, 0.35, size=(12, 8))


@pytest.fixture()
def table() -> Generator:
    """
    Yield a 200 x 32 vocabulary table with N(0, 1/d) rows.
    """

    yield VocabEmbeddingTable(np.random.default_rng(5).normal(0.0, 1 / math.sqrt(32), (200, 32)))


class TestSampleNoise:
    def test_noise_vector_is_radius_times_direction(self) -> None:
        sample = sample_noise(16, 2.0, RngState(0))
        assert abs(np.linalg.norm(sample.direction) - 1.0) < 1e-9
        assert np.array_equal(sample.z, sample.radius * sample.direction)

    def test_radius_follows_gamma(self) -> None:
        """Mean within 1% of d/η and variance within 3% of d/η² at N=200k."""

        draw = sample_noise_matrix(200_000, 16, 2.0, RngState(1))
        lengths = np.linalg.norm(draw.z, axis=1)
        assert abs(lengths.mean() - 8.0) < 0.08
        assert abs(lengths.var() - 4.0) < 0.12

    def test_one_dimensional_laplace_tail(self) -> None:
        draw = sample_noise_matrix(100_000, 1, 1.0, RngState(2))
        magnitudes = np.abs(draw.z[:, 0])
        for t in (0.5, 1.0, 2.0):
            assert abs((magnitudes > t).mean() - math.exp(-t)) < 0.01

    def test_mean_direction_is_zero(self) -> None:
        draw = sample_noise_matrix(50_000, 3, 1.0, RngState(3))
        standard_error = draw.directions.std(axis=0) / math.sqrt(50_000)
        assert np.all(np.abs(draw.directions.mean(axis=0)) < 3 * standard_error)

    def test_directions_are_uniform_over_octants(self) -> None:
        draw = sample_noise_matrix(100_000, 3, 1.0, RngState(4))
        octants = (draw.directions > 0).astype(int) @ np.array([1, 2, 4])
        counts = np.bincount(octants, minlength=8)
        assert stats.chisquare(counts).pvalue > 0.01

    @pytest.mark.parametrize("eta", [0.0, -1.0, math.nan])
    def test_invalid_eta(self, eta: float) -> None:
        with pytest.raises(PrivacyParameterError):
            sample_noise(4, eta, RngState(0))


class TestPrivatize:
    def test_infinite_eta_is_identity(self, tokens: np.ndarray) -> None:
        assert np.array_equal(privatize(tokens, INFINITE_ETA, RngState(0)), tokens)

    def test_adds_the_drawn_noise(self, tokens: np.ndarray) -> None:
        drawn = sample_noise_matrix(12, 8, 3.0, RngState(9)).z
        assert np.array_equal(privatize(tokens, 3.0, RngState(9)), tokens + drawn)

    def test_same_seed_same_output(self, tokens: np.ndarray) -> None:
        first = privatize(tokens, 3.0, RngState(9))
        second = privatize(tokens, 3.0, RngState(9))
        assert np.array_equal(first, second)

    def test_baseline_is_unclipped_privatize(self, tokens: np.ndarray) -> None:
        baseline = tok_emb_priv_baseline(tokens, 0.5, RngState(9))
        assert np.array_equal(baseline, privatize(tokens, 0.5, RngState(9)))


class TestClipping:
    def test_rows_inside_bound_unchanged(self) -> None:
        m = np.array([[0.3, 0.4], [1.0, 0.0]])
        assert np.array_equal(clip_privatized(m, ClipBound(1.0)), m)

    def test_scales_onto_the_ball(self) -> None:
        clipped = clip_privatized(np.array([[3.0, 4.0]]), ClipBound(2.5))
        assert np.array_equal(clipped, [[1.5, 2.0]])

    def test_bound_from_vocabulary(self) -> None:
        table = VocabEmbeddingTable(np.array([[3.0, 4.0], [0.0, 1.0]]))
        assert ClipBound.from_vocabulary(table).c == 5.0

    def test_bound_covers_every_row(self, table: VocabEmbeddingTable) -> None:
        bound = ClipBound.from_vocabulary(table)
        assert np.all(table.row_norms() <= bound.c)

    def test_idempotent_norm_bounded_direction_preserving(self) -> None:
        m = np.random.default_rng(6).normal(0.0, 3.0, size=(500, 16))
        bound = ClipBound(1.7)
        once = clip_privatized(m, bound)
        twice = clip_privatized(once, bound)

        assert np.array_equal(once, twice)
        assert np.all(np.sqrt((once * once).sum(axis=1)) <= bound.c)
        unit_before = m / np.linalg.norm(m, axis=1, keepdims=True)
        unit_after = once / np.linalg.norm(once, axis=1, keepdims=True)
        assert np.max(np.abs(unit_before - unit_after)) < 1e-12

    def test_non_positive_bound(self) -> None:
        with pytest.raises(PrivacyParameterError):
            ClipBound(0.0)


class TestEffectiveNoise:
    def test_no_noise_gives_zero(self, tokens: np.ndarray) -> None:
        bound = ClipBound(2.0 * float(np.linalg.norm(tokens, axis=1).max()))
        clipped = clip_privatized(privatize(tokens, INFINITE_ETA, RngState(0)), bound)
        assert np.array_equal(effective_noise(clipped, tokens), np.zeros_like(tokens))

    def test_reconstructs_clipped_exactly(self, tokens: np.ndarray) -> None:
        clipped = clip_privatized(privatize(tokens, 2.0, RngState(1)), ClipBound(1.2))
        noise = effective_noise(clipped, tokens)
        assert np.array_equal(tokens + noise, clipped)

    def test_unclipped_row_matches_drawn_noise(self, tokens: np.ndarray) -> None:
        drawn = sample_noise_matrix(12, 8, 50.0, RngState(2)).z
        clipped = clip_privatized(privatize(tokens, 50.0, RngState(2)), ClipBound(1e6))
        assert np.allclose(effective_noise(clipped, tokens), drawn, rtol=0, atol=1e-14)

    def test_clipped_row_differs_from_drawn_noise(self, tokens: np.ndarray) -> None:
        drawn = sample_noise_matrix(12, 8, 0.5, RngState(3)).z
        clipped = clip_privatized(privatize(tokens, 0.5, RngState(3)), ClipBound(1.0))
        noise = effective_noise(clipped, tokens)
        assert np.allclose(noise, clipped - tokens, rtol=0, atol=1e-14)
        assert not np.allclose(noise, drawn)


class TestCorrelation:
    def test_infinite_eta(self, table: VocabEmbeddingTable) -> None:
        assert privatization_correlation(table, INFINITE_ETA, RngState(0)) == 1.0

    def test_grows_with_eta(self, table: VocabEmbeddingTable) -> None:
        low = privatization_correlation(table, 1.0, RngState(0))
        high = privatization_correlation(table, 100.0, RngState(0))
        assert low < 0.2 < 0.8 < high


class TestDensityRatio:
    def test_same_point(self) -> None:
        x = np.array([0.2, -1.0, 3.0])
        assert log_density_ratio(x, x, np.array([1.0, 1.0, 1.0]), 2.0) == 0.0

    def test_collinear_case_is_tight(self) -> None:
        ratio = log_density_ratio(
            np.array([3.0, 4.0]), np.array([0.0, 0.0]), np.array([6.0, 8.0]), 2.0
        )
        assert ratio == 2.0 * 5.0

    def test_never_exceeds_bound(self) -> None:
        generator = np.random.default_rng(8)
        eta = 3.0
        for _ in range(10_000):
            x, x_prime, y = generator.normal(size=(3, 8))
            bound = eta * np.linalg.norm(x - x_prime)
            assert log_density_ratio(x, x_prime, y, eta) <= bound + 1e-9


class TestServerBound:
    def test_reference_value(self) -> None:
        assert server_mse_lower_bound(1.0, 1.0, 4.0, 1) == pytest.approx(
            1.0 / (math.e - 1.0), rel=1e-12
        )
        assert server_mse_lower_bound(1.0, 1.0, 4.0, 1) == pytest.approx(0.58198, abs=1e-5)

    @pytest.mark.parametrize(
        "eta, b_x, diam_sq_sum, k",
        [(0.5, 1.0, 2.0, 1), (1.0, 2.0, 8.0, 3), (3.0, 0.5, 1.0, 2), (10.0, 0.1, 7.5, 4), (2.0, 1.5, 0.3, 10)],
    )
    def test_matches_formula(self, eta: float, b_x: float, diam_sq_sum: float, k: int) -> None:
        expected = (diam_sq_sum / (4 * k)) / (math.exp(eta * b_x) - 1.0)
        assert server_mse_lower_bound(eta, b_x, diam_sq_sum, k) == pytest.approx(
            expected, rel=1e-12
        )

    def test_strictly_decreasing(self) -> None:
        values = [server_mse_lower_bound(eta, 1.0, 4.0, 1) for eta in (0.1, 1.0, 10.0, 100.0)]
        assert all(later < earlier for earlier, later in zip(values, values[1:]))
        assert server_mse_lower_bound(1e4, 1.0, 4.0, 1) == 0.0

    def test_doubling_k_halves_bound(self) -> None:
        single = server_mse_lower_bound(2.0, 1.0, 4.0, 3)
        double = server_mse_lower_bound(2.0, 1.0, 4.0, 6)
        assert double == pytest.approx(single / 2.0, rel=1e-15)

    def test_underflowing_exponent(self) -> None:
        with pytest.raises(UndefinedBoundError):
            server_mse_lower_bound(1e-200, 1e-200, 4.0, 1)


class TestText2Text:
    def test_infinite_eta_returns_original_ids(self, table: VocabEmbeddingTable) -> None:
        ids = np.array([5, 17, 199, 0, 5])
        result = text2text_privatize(table.embeddings[ids], table, INFINITE_ETA, RngState(0))
        assert np.array_equal(result, ids)

    def test_small_noise_keeps_tokens(self) -> None:
        vocab = VocabEmbeddingTable(np.array([[0.0, 0.0], [10.0, 0.0]]))
        ids = np.zeros(1000, dtype=int)
        result = text2text_privatize(vocab.embeddings[ids], vocab, 10.0, RngState(1))
        assert (result == 0).mean() > 0.99
