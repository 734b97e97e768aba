"""
The dχ-privacy mechanism: Laplacian token noise, norm clipping, and the
effective noise the client keeps for the denoiser.

A noise vector is z = l·v with radius l ~ Gamma(d, 1/η) and v uniform on the
unit sphere, which gives the density c·exp(-η‖z‖). `INFINITE_ETA` marks the
no-noise control arm and draws nothing.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..core.rng import RngState
from ..core.tensor import Array
from ..exceptions import DimensionError, PrivacyParameterError
from ..model.vocab import VocabEmbeddingTable

log = logging.getLogger(__name__)

INFINITE_ETA = math.inf
MAX_NUDGES = 8


def is_infinite(eta: float) -> bool:
    return math.isinf(eta) and eta > 0


def check_eta(eta: float) -> float:
    if math.isnan(eta) or eta <= 0:
        raise PrivacyParameterError(f"eta must be positive, got {eta}")
    return float(eta)


def row_norms(values: Array) -> Array:
    return np.sqrt((values * values).sum(axis=-1))


@dataclass(frozen=True)
class NoiseSample:
    """One noise draw: radius `radius`, unit direction `direction`, vector z."""

    radius: float
    direction: Array
    z: Array


@dataclass(frozen=True)
class NoiseMatrixDraw:
    radii: Array
    directions: Array
    z: Array


def sample_noise(d: int, eta: float, rng: RngState) -> NoiseSample:
    """Draw a single d-dimensional Laplacian noise vector."""

    draw = sample_noise_matrix(1, d, eta, rng)
    return NoiseSample(float(draw.radii[0]), draw.directions[0], draw.z[0])


def sample_noise_matrix(n: int, d: int, eta: float, rng: RngState) -> NoiseMatrixDraw:
    """
    Draw n independent noise vectors. The stream order is fixed: n Gamma radii
    first, then n·d Gaussians for the directions.
    """

    if d < 1 or n < 0:
        raise DimensionError(f"noise shape must have n >= 0 and d >= 1, got ({n}, {d})")
    check_eta(eta)
    if is_infinite(eta):
        return NoiseMatrixDraw(np.zeros(n), np.zeros((n, d)), np.zeros((n, d)))

    # numpy's gamma sampler is Marsaglia-Tsang rejection sampling
    radii = rng.generator.gamma(shape=float(d), scale=1.0 / eta, size=n)
    gaussians = rng.generator.standard_normal(size=(n, d))
    norms = row_norms(gaussians)
    directions = gaussians / norms[:, None]
    return NoiseMatrixDraw(radii, directions, radii[:, None] * directions)


def privatize(x: Array, eta: float, rng: RngState) -> Array:
    """M(x_t) = x_t + z_t for every row, with no clipping."""

    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionError(f"token matrix must be 2-D, got shape {values.shape}")
    check_eta(eta)
    if is_infinite(eta):
        return values.copy()
    return values + sample_noise_matrix(values.shape[0], values.shape[1], eta, rng).z


@dataclass(frozen=True)
class ClipBound:
    """The global clip radius: the largest vocabulary row norm."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > 0 or math.isinf(self.c):
            raise PrivacyParameterError(f"clip bound must be positive and finite, got {self.c}")

    @classmethod
    def from_vocabulary(cls, table: VocabEmbeddingTable) -> "ClipBound":
        return cls(float(table.row_norms().max()))


def clip_privatized(m: Array, bound: ClipBound) -> Array:
    """
    Rescale every row with norm above `bound.c` onto the ball of radius c.
    Rows already inside the ball are returned unchanged, so clipping twice
    equals clipping once.
    """

    values = np.array(m, dtype=np.float64)
    norms = row_norms(values)
    outside = norms > bound.c
    if not outside.any():
        return values

    values[outside] = values[outside] * (bound.c / norms[outside])[:, None]
    shrink = np.nextafter(1.0, 0.0)
    for _ in range(MAX_NUDGES):
        over = row_norms(values) > bound.c
        if not over.any():
            break
        values[over] = values[over] * shrink
    return values


def effective_noise(clipped: Array, clean: Array) -> Array:
    """
    Z = M'(X) - X, adjusted by at most a few ulps so that clean + Z reproduces
    `clipped` exactly.
    """

    target = np.asarray(clipped, dtype=np.float64)
    base = np.asarray(clean, dtype=np.float64)
    if target.shape != base.shape:
        raise DimensionError(
            f"clipped matrix {target.shape} and clean matrix {base.shape} differ"
        )

    noise = target - base
    miss = base + noise != target
    for _ in range(MAX_NUDGES):
        if not miss.any():
            break
        toward = np.where(base[miss] + noise[miss] < target[miss], np.inf, -np.inf)
        noise[miss] = np.nextafter(noise[miss], toward)
        miss = base + noise != target
    if miss.any():
        log.debug("%s noise entries cannot reproduce the clipped value exactly", miss.sum())
    return noise


def privatization_correlation(
    table: VocabEmbeddingTable, eta: float, rng: RngState, samples: int = 1000
) -> float:
    """
    Pearson correlation between clean and privatized representations of
    sampled vocabulary rows, flattened. The statistic used to group η values
    into denoiser partitions.
    """

    check_eta(eta)
    if is_infinite(eta):
        return 1.0
    count = min(samples, table.vocab_size)
    rows = rng.generator.choice(table.vocab_size, size=count, replace=False)
    clean = table.embeddings[np.sort(rows)]
    noisy = privatize(clean, eta, rng)
    return float(np.corrcoef(clean.reshape(-1), noisy.reshape(-1))[0, 1])
