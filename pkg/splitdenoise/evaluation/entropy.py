"""
Kozachenko–Leonenko k-nearest-neighbor entropy and the differenced mutual
information estimate between privatized tokens and their noise.

    H(X) ≈ ψ(N) − ψ(k) + log c_d + (d/N) Σ log ε(i)

With equal N, k and d the first three terms cancel between two sample sets,
so I(X; X̃) ≈ (d/N) Σ log ε_X̃(i) − (d/N) Σ log ε_Z(i).
"""

import logging
import math

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from ..core.tensor import Array
from ..exceptions import (
    ContractError,
    DegenerateDistanceError,
    DimensionError,
    DomainError,
)
from ..schemas.evaluation import MIEstimate

log = logging.getLogger(__name__)

DEFAULT_K = 3


def _points(points: Array) -> Array:
    values = np.asarray(points, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise DimensionError(f"points must be N x d, got {values.shape}")
    return values


def knn_distance(points: Array, k: int = DEFAULT_K) -> Array:
    """
    Euclidean distance from every point to its k-th nearest other point,
    found exactly with a kd-tree.
    """

    values = _points(points)
    if k < 1 or values.shape[0] <= k:
        raise ContractError(f"need more than k = {k} points, got {values.shape[0]}")
    distances, _ = cKDTree(values).query(values, k=k + 1)
    if np.any(distances[:, 1] == 0.0):
        raise DegenerateDistanceError("the sample holds duplicate points")
    return distances[:, k]


def digamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"digamma needs a positive argument, got {x}")
    return float(special.digamma(x))


def unit_ball_volume(d: int) -> float:
    """π^(d/2) / Γ(d/2 + 1), evaluated in log space."""

    if d < 1:
        raise DomainError(f"dimension must be at least 1, got {d}")
    return math.exp(log_unit_ball_volume(d))


def log_unit_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - float(special.gammaln(0.5 * d + 1.0))


def knn_entropy(points: Array, k: int = DEFAULT_K) -> float:
    """Differential entropy estimate in nats."""

    values = _points(points)
    count, d = values.shape
    distances = knn_distance(values, k)
    return (
        digamma(count)
        - digamma(k)
        + log_unit_ball_volume(d)
        + d * float(np.mean(np.log(distances)))
    )


def mi_estimate(x_tilde_samples: Array, z_samples: Array, k: int = DEFAULT_K) -> MIEstimate:
    x_tilde = _points(x_tilde_samples)
    z = _points(z_samples)
    if x_tilde.shape != z.shape:
        raise DimensionError(
            f"privatized samples {x_tilde.shape} and noise samples {z.shape} differ in shape"
        )
    count, d = x_tilde.shape
    value = d * float(np.mean(np.log(knn_distance(x_tilde, k)))) - d * float(
        np.mean(np.log(knn_distance(z, k)))
    )
    log.debug("MI estimate %.6f nats from %s samples in %s dimensions", value, count, d)
    return MIEstimate(value=value, count=count, k=k, dim=d)
