"""The client-side denoiser, its training loop, and the η-partitioned registry."""

from .model import (
    DenoiserWeights,
    build_input,
    denoise,
    denoise_batch,
    denoise_forward,
    init_denoiser,
)
from .registry import (
    EtaPartition,
    EtaPartitionRegistry,
    load_registry,
    partition_by_correlation,
    save_registry,
    select_denoiser,
    train_registry,
)
from .training import (
    TrainingBatch,
    collect_pairs,
    denoise_pairs,
    denoiser_loss,
    evaluate_denoiser,
    finetune_denoiser,
    generate_training_pairs,
    row_cosines,
    train_denoiser,
)

__all__ = [
    "DenoiserWeights",
    "EtaPartition",
    "EtaPartitionRegistry",
    "TrainingBatch",
    "build_input",
    "collect_pairs",
    "denoise",
    "denoise_batch",
    "denoise_forward",
    "denoise_pairs",
    "denoiser_loss",
    "evaluate_denoiser",
    "finetune_denoiser",
    "generate_training_pairs",
    "init_denoiser",
    "load_registry",
    "partition_by_correlation",
    "row_cosines",
    "save_registry",
    "select_denoiser",
    "train_denoiser",
    "train_registry",
]
