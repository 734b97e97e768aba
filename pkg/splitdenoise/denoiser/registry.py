"""
Denoisers keyed by privacy budget.

η values are grouped into intervals (low, high] by how strongly privatized
tokens still correlate with the clean ones; each interval gets its own
denoiser trained on noise drawn at two representative η values. A registry
is persisted as SNDW checkpoints plus a plain-text manifest of
`eta_low eta_high checkpoint_path` lines.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.checkpoint import (
    load_checkpoint,
    pack_settings,
    save_checkpoint,
    unpack_settings,
)
from ..core.params import ParameterStore
from ..core.rng import RngState
from ..exceptions import CheckpointError, ContractError, EmptyInputError, NoDenoiserError
from ..model.encoder import EncoderWeights
from ..model.vocab import VocabEmbeddingTable
from ..privacy.mechanism import check_eta, is_infinite, privatization_correlation
from ..schemas.denoiser import DenoiserConfig
from .model import DenoiserWeights
from .training import collect_pairs, train_denoiser

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
CONFIG_PREFIX = "config."
REPRESENTATIVES_KEY = "partition.representatives"


@dataclass(frozen=True)
class EtaPartition:
    """One η interval (low, high], its training η values and its model."""

    low: float
    high: float
    representatives: Tuple[float, float]
    weights: Optional[DenoiserWeights] = None

    def __post_init__(self) -> None:
        if not 0 <= self.low < self.high:
            raise ContractError(f"invalid eta interval ({self.low}, {self.high}]")

    def contains(self, eta: float) -> bool:
        return self.low < eta <= self.high


class EtaPartitionRegistry:
    """Disjoint, sorted η partitions whose models share one configuration."""

    def __init__(self, partitions: Sequence[EtaPartition]) -> None:
        if not partitions:
            raise EmptyInputError("a registry needs at least one partition")
        ordered = sorted(partitions, key=lambda partition: partition.low)
        for lower, upper in zip(ordered, ordered[1:]):
            if upper.low < lower.high:
                raise ContractError(
                    f"eta intervals ({lower.low}, {lower.high}] and "
                    f"({upper.low}, {upper.high}] overlap"
                )
        configs = {
            partition.weights.config.json()
            for partition in ordered
            if partition.weights is not None
        }
        if len(configs) > 1:
            raise ContractError("every denoiser in a registry must share one configuration")
        self._partitions = tuple(ordered)

    @property
    def partitions(self) -> Tuple[EtaPartition, ...]:
        return self._partitions

    def __iter__(self) -> Iterator[EtaPartition]:
        return iter(self._partitions)

    def __len__(self) -> int:
        return len(self._partitions)

    def select(self, eta: float) -> DenoiserWeights:
        check_eta(eta)
        for partition in self._partitions:
            if partition.contains(eta):
                if partition.weights is None:
                    raise NoDenoiserError(
                        f"partition ({partition.low}, {partition.high}] has no trained model"
                    )
                return partition.weights
        raise NoDenoiserError(f"no partition covers eta = {eta}")


def select_denoiser(eta: float, registry: EtaPartitionRegistry) -> DenoiserWeights:
    """The model whose interval holds `eta`; boundaries belong to the lower interval."""

    return registry.select(eta)


def _representatives(members: Sequence[float]) -> Tuple[float, float]:
    finite = sorted(eta for eta in members if not is_infinite(eta))
    if not finite:
        return (math.inf, math.inf)
    low, high = finite[0], finite[-1]
    if low == high:
        return (low, low)
    ratio = high / low
    return (low * ratio ** (1 / 3), low * ratio ** (2 / 3))


def partition_by_correlation(
    table: VocabEmbeddingTable,
    eta_grid: Sequence[float],
    rng: RngState,
    thresholds: Tuple[float, float] = (0.8, 0.2),
    samples: int = 1000,
) -> List[EtaPartition]:
    """
    Split (0, ∞] into at most three intervals at the largest grid η whose
    privatization correlation stays below each threshold. Each interval's
    representatives are the geometric one-third and two-thirds points between
    its smallest and largest finite grid members.
    """

    grid = sorted({check_eta(eta) for eta in eta_grid})
    if not grid:
        raise EmptyInputError("the eta grid is empty")
    high_threshold, low_threshold = thresholds
    correlations = [
        privatization_correlation(table, eta, rng.spawn(index), samples)
        for index, eta in enumerate(grid)
    ]
    for eta, corr in zip(grid, correlations):
        log.debug("eta %s: privatization correlation %.4f", eta, corr)

    edges = [0.0]
    for threshold in (low_threshold, high_threshold):
        below = [eta for eta, corr in zip(grid, correlations) if corr < threshold]
        if below and max(below) > edges[-1]:
            edges.append(max(below))
    if edges[-1] >= grid[-1] and len(edges) > 1:
        edges.pop()
    edges.append(math.inf)

    partitions = []
    for low, high in zip(edges, edges[1:]):
        members = [eta for eta in grid if low < eta <= high]
        partitions.append(EtaPartition(low, high, _representatives(members)))
    log.info(
        "Partitioned %s eta values into %s",
        len(grid),
        ", ".join(f"({p.low}, {p.high}]" for p in partitions),
    )
    return partitions


def train_registry(
    corpus: Sequence[Sequence[int]],
    table: VocabEmbeddingTable,
    encoder: EncoderWeights,
    partitions: Sequence[EtaPartition],
    config: DenoiserConfig,
    rng: RngState,
    samples_per_sequence: int = 1,
    clip: bool = True,
) -> EtaPartitionRegistry:
    """Train one denoiser per partition on noise at its representative η values."""

    trained = []
    for index, partition in enumerate(partitions):
        pairs = collect_pairs(
            corpus,
            table,
            encoder,
            partition.representatives,
            rng.spawn(index),
            samples_per_sequence=samples_per_sequence,
            clip=clip,
        )
        weights, history = train_denoiser(pairs, config)
        log.info(
            "Partition (%s, %s]: train mse %.6f -> %.6f",
            partition.low,
            partition.high,
            history.initial,
            history.final,
        )
        trained.append(replace(partition, weights=weights))
    return EtaPartitionRegistry(trained)


def save_registry(directory: Union[str, Path], registry: EtaPartitionRegistry) -> Path:
    """Write one checkpoint per partition and the manifest; returns the manifest path."""

    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for index, partition in enumerate(registry):
        if partition.weights is None:
            raise ContractError(
                f"partition ({partition.low}, {partition.high}] has no model to save"
            )
        name = f"denoiser-{index}.sndw"
        tensors = pack_settings(CONFIG_PREFIX, partition.weights.config.dict())
        tensors[REPRESENTATIVES_KEY] = np.asarray(partition.representatives, dtype=np.float64)
        tensors.update({key: tensor.data for key, tensor in partition.weights.store.items()})
        save_checkpoint(root / name, tensors)
        lines.append(f"{partition.low!r} {partition.high!r} {name}")
    manifest = root / MANIFEST_NAME
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info("Saved %s denoisers to %s", len(lines), root)
    return manifest


def _load_partition(low: float, high: float, path: Path) -> EtaPartition:
    tensors = load_checkpoint(path)
    settings = unpack_settings(tensors, CONFIG_PREFIX)
    try:
        representatives = tensors.pop(REPRESENTATIVES_KEY).tolist()
        config = DenoiserConfig(**settings)
    except (KeyError, ValueError) as err:
        raise CheckpointError(f"{path} is not a denoiser checkpoint: {err}") from err
    weights = DenoiserWeights.from_store(config, ParameterStore(tensors).freeze())
    return EtaPartition(low, high, (representatives[0], representatives[1]), weights)


def load_registry(manifest: Union[str, Path]) -> EtaPartitionRegistry:
    path = Path(manifest)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise CheckpointError(f"cannot read registry manifest {path}: {err}") from err

    partitions = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(maxsplit=2)
        try:
            low, high = float(fields[0]), float(fields[1])
            checkpoint = Path(fields[2])
        except (IndexError, ValueError) as err:
            raise CheckpointError(f"{path}:{number}: expected 'eta_low eta_high path'") from err
        if not checkpoint.is_absolute():
            checkpoint = path.parent / checkpoint
        partitions.append(_load_partition(low, high, checkpoint))
    return EtaPartitionRegistry(partitions)
