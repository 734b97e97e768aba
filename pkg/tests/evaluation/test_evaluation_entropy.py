import math

import numpy as np
import pytest

from splitdenoise.core import RngState
from splitdenoise.evaluation import (
    digamma,
    knn_distance,
    knn_entropy,
    mi_estimate,
    unit_ball_volume,
)
from splitdenoise.exceptions import ContractError, DegenerateDistanceError, DomainError
from splitdenoise.model import VocabEmbeddingTable
from splitdenoise.privacy import sample_noise_matrix

EULER_GAMMA = 0.5772156649015329


class TestKnnDistance:
    def test_one_dimensional(self) -> None:
        assert knn_distance(np.array([0.0, 1.0, 3.0]), k=1).tolist() == [1.0, 1.0, 2.0]

    def test_largest_order_is_farthest_point(self) -> None:
        assert knn_distance(np.array([0.0, 1.0, 3.0]), k=2).tolist() == [3.0, 2.0, 3.0]

    def test_matches_brute_force(self) -> None:
        points = np.random.default_rng(0).normal(size=(300, 2))
        pairwise = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=-1))
        expected = np.sort(pairwise, axis=1)[:, 3]
        assert np.allclose(knn_distance(points, k=3), expected, rtol=0, atol=1e-12)

    def test_duplicates(self) -> None:
        with pytest.raises(DegenerateDistanceError):
            knn_distance(np.array([[0.0, 1.0], [0.0, 1.0], [2.0, 2.0]]), k=1)

    def test_too_few_points(self) -> None:
        with pytest.raises(ContractError):
            knn_distance(np.array([0.0, 1.0, 2.0]), k=3)


class TestSpecialFunctions:
    def test_digamma_values(self) -> None:
        assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-10)
        assert digamma(2.0) == pytest.approx(1.0 - EULER_GAMMA, abs=1e-10)
        assert digamma(100.0) == pytest.approx(math.log(100) - 1 / 200 - 1 / 120000, abs=1e-9)

    def test_digamma_recurrence_near_zero(self) -> None:
        assert digamma(1e-3 + 1) == pytest.approx(digamma(1e-3) + 1 / 1e-3, abs=1e-10)

    @pytest.mark.parametrize("x", [0.0, -2.0])
    def test_digamma_domain(self, x: float) -> None:
        with pytest.raises(DomainError):
            digamma(x)

    def test_unit_ball_volume(self) -> None:
        assert unit_ball_volume(1) == pytest.approx(2.0, rel=1e-12)
        assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-12)
        assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-12)


class TestKnnEntropy:
    def test_standard_gaussian(self) -> None:
        sample = np.random.default_rng(1).normal(size=20_000)
        assert knn_entropy(sample, k=3) == pytest.approx(0.5 * math.log(2 * math.pi * math.e), abs=0.05)

    def test_uniform(self) -> None:
        sample = np.random.default_rng(2).uniform(size=20_000)
        assert knn_entropy(sample, k=3) == pytest.approx(0.0, abs=0.05)

    def test_scaling_law(self) -> None:
        first = np.random.default_rng(3).normal(size=20_000)
        second = 2.0 * np.random.default_rng(4).normal(size=20_000)
        assert knn_entropy(second) - knn_entropy(first) == pytest.approx(math.log(2.0), abs=0.05)

    def test_translation_invariant(self) -> None:
        sample = np.random.default_rng(5).normal(size=(500, 3))
        assert knn_entropy(sample + 4.0) == pytest.approx(knn_entropy(sample), abs=1e-9)


class TestMiEstimate:
    def test_identical_sets(self) -> None:
        points = np.random.default_rng(6).normal(size=(400, 4))
        estimate = mi_estimate(points, points.copy())
        assert estimate.value == 0.0
        assert (estimate.count, estimate.k, estimate.dim) == (400, 3, 4)

    def test_gaussian_channel(self) -> None:
        generator = np.random.default_rng(7)
        x = generator.normal(size=20_000)
        z = generator.normal(size=20_000)
        assert mi_estimate(x + z, z).value == pytest.approx(0.5 * math.log(2.0), abs=0.05)

    def test_increases_with_eta(self) -> None:
        table = VocabEmbeddingTable(np.random.default_rng(8).normal(0.0, 0.5, size=(200, 4)))
        values = []
        for eta in (0.1, 1.0, 10.0, 100.0):
            rng = RngState(9)
            ids = rng.generator.integers(0, 200, size=3000)
            z = sample_noise_matrix(3000, 4, eta, rng).z
            values.append(mi_estimate(table.embeddings[ids] + z, z).value)
        assert values == sorted(values)
        assert len(set(values)) == 4
