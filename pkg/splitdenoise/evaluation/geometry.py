"""Vocabulary spacing against noise magnitude."""

import logging

import numpy as np
from scipy.spatial import cKDTree

from ..core.rng import RngState
from ..exceptions import ContractError
from ..model.vocab import VocabEmbeddingTable
from ..privacy.mechanism import check_eta, is_infinite, row_norms, sample_noise_matrix
from ..schemas.evaluation import GeometryReport

log = logging.getLogger(__name__)


def geometry_metrics(
    table: VocabEmbeddingTable,
    eta: float,
    k: int,
    rng: RngState,
    sample_count: int,
    draws: int = 0,
) -> GeometryReport:
    """
    Mean distance from `sample_count` sampled vocabulary rows to their k-th
    nearest other row, and the mean length ‖M(x) − x‖ of `draws` fresh noise
    vectors (`sample_count` when `draws` is 0).
    """

    check_eta(eta)
    if not 0 < sample_count <= table.vocab_size:
        raise ContractError(
            f"sample_count must lie in [1, {table.vocab_size}], got {sample_count}"
        )
    if not 1 <= k < table.vocab_size:
        raise ContractError(f"k must lie in [1, {table.vocab_size - 1}], got {k}")

    rows = np.sort(rng.generator.choice(table.vocab_size, size=sample_count, replace=False))
    distances, _ = cKDTree(table.embeddings).query(table.embeddings[rows], k=k + 1)
    knn = float(np.mean(distances[:, k]))

    if is_infinite(eta):
        perturbation = 0.0
    else:
        noise = sample_noise_matrix(draws or sample_count, table.dim, eta, rng).z
        perturbation = float(np.mean(row_norms(noise)))
    log.debug("geometry at eta %s: knn %.6f, perturbation %.6f", eta, knn, perturbation)
    return GeometryReport(knn_distance=knn, perturbation_distance=perturbation, eta=eta, k=k)
