"""
Training data and the training loop for the denoiser.

The server side of the pipeline generates pairs from a public corpus: each
sequence is privatized at one of a partition's representative η values, and
the clean and noisy sentence embeddings come from the same frozen encoder
that serves inference.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.ops import Mask, mean_squared_error
from ..core.params import ParameterStore, adam_step, backward
from ..core.rng import RngState
from ..core.tensor import Array, Tensor
from ..exceptions import DimensionError, DivergenceError, EmptyInputError, NonFiniteError
from ..model.encoder import EncoderWeights, encode_batch, pad_sequences
from ..model.vocab import VocabEmbeddingTable, embed_tokens
from ..privacy.mechanism import (
    ClipBound,
    check_eta,
    clip_privatized,
    effective_noise,
    privatize,
)
from ..schemas.denoiser import DenoiseMetrics, DenoiserConfig, LossHistory
from .model import (
    DenoiserWeights,
    assemble_input,
    denoise_batch,
    denoiser_forward,
    init_denoiser_store,
)

log = logging.getLogger(__name__)

EVAL_CHUNK = 256


@dataclass(frozen=True)
class TrainingBatch:
    """
    Denoiser training items, padded to a shared token count n.

    e_n, e_c: (B, d); x_tilde, z: (B, n, d); mask: (B, n) marks real rows.
    """

    e_n: Array
    x_tilde: Array
    z: Array
    e_c: Array
    mask: Mask

    def __post_init__(self) -> None:
        rows, width, d = self.x_tilde.shape
        if self.z.shape != self.x_tilde.shape:
            raise DimensionError(
                f"noise {self.z.shape} and privatized tokens {self.x_tilde.shape} differ"
            )
        if self.e_n.shape != (rows, d) or self.e_c.shape != (rows, d):
            raise DimensionError(
                f"embeddings {self.e_n.shape} and {self.e_c.shape} do not match {(rows, d)}"
            )
        if self.mask.shape != (rows, width):
            raise DimensionError(f"mask {self.mask.shape} does not match {(rows, width)}")

    def __len__(self) -> int:
        return int(self.e_n.shape[0])

    @property
    def width(self) -> int:
        return int(self.x_tilde.shape[1])

    def take(self, rows: Union[Sequence[int], Array]) -> "TrainingBatch":
        index = np.asarray(rows, dtype=np.int64)
        return TrainingBatch(
            self.e_n[index], self.x_tilde[index], self.z[index], self.e_c[index], self.mask[index]
        )

    @classmethod
    def concatenate(cls, batches: Iterable["TrainingBatch"]) -> "TrainingBatch":
        parts = list(batches)
        if not parts:
            raise EmptyInputError("no training batches")
        width = max(part.width for part in parts)

        def widen(values: Array) -> Array:
            pad = [(0, 0)] * values.ndim
            pad[1] = (0, width - values.shape[1])
            return np.pad(values, pad)

        return cls(
            np.concatenate([part.e_n for part in parts]),
            np.concatenate([widen(part.x_tilde) for part in parts]),
            np.concatenate([widen(part.z) for part in parts]),
            np.concatenate([part.e_c for part in parts]),
            np.concatenate([widen(part.mask) for part in parts]),
        )


def generate_training_pairs(
    corpus: Sequence[Sequence[int]],
    table: VocabEmbeddingTable,
    encoder: EncoderWeights,
    etas: Sequence[float],
    rng: RngState,
    samples_per_sequence: int = 1,
    clip: bool = True,
    round_noisy: bool = False,
    chunk_size: int = 256,
) -> Iterator[TrainingBatch]:
    """
    Yield chunks of training items, `samples_per_sequence` per corpus
    sequence, in corpus order. Each item draws its η uniformly from `etas`.
    With `round_noisy` the noisy embedding goes through float32 the way it
    does on the wire.
    """

    if not corpus:
        raise EmptyInputError("cannot generate training pairs from an empty corpus")
    if not etas:
        raise EmptyInputError("at least one representative eta is required")
    choices = [check_eta(eta) for eta in etas]
    bound = ClipBound.from_vocabulary(table) if clip else None
    longest = max(len(ids) for ids in corpus)
    items = [row for row in range(len(corpus)) for _ in range(samples_per_sequence)]

    for start in range(0, len(items), chunk_size):
        clean: List[Array] = []
        privatized: List[Array] = []
        noise: List[Array] = []
        for row in items[start : start + chunk_size]:
            x = embed_tokens(corpus[row], table)
            eta = choices[int(rng.generator.integers(len(choices)))]
            m = privatize(x, eta, rng)
            if bound is not None:
                m = clip_privatized(m, bound)
            clean.append(x)
            privatized.append(m)
            noise.append(effective_noise(m, x))

        x_batch, mask = pad_sequences(clean, longest)
        x_tilde, _ = pad_sequences(privatized, longest)
        z, _ = pad_sequences(noise, longest)
        e_c = encode_batch(x_batch, encoder, mask)
        e_n = encode_batch(x_tilde, encoder, mask)
        if round_noisy:
            e_n = e_n.astype(np.float32).astype(np.float64)
        yield TrainingBatch(e_n, x_tilde, z, e_c, mask)


def collect_pairs(
    corpus: Sequence[Sequence[int]],
    table: VocabEmbeddingTable,
    encoder: EncoderWeights,
    etas: Sequence[float],
    rng: RngState,
    **options: Any,
) -> TrainingBatch:
    return TrainingBatch.concatenate(
        generate_training_pairs(corpus, table, encoder, etas, rng, **options)
    )


def split_validation(
    data: TrainingBatch, fraction: float, rng: RngState
) -> Tuple[TrainingBatch, Optional[TrainingBatch]]:
    """Hold out a random `fraction` of items, keeping at least one for training."""

    count = min(int(round(len(data) * fraction)), len(data) - 1)
    if count <= 0:
        return data, None
    order = rng.generator.permutation(len(data))
    return data.take(np.sort(order[count:])), data.take(np.sort(order[:count]))


def _as_batch(batches: Union[TrainingBatch, Iterable[TrainingBatch]]) -> TrainingBatch:
    data = batches if isinstance(batches, TrainingBatch) else TrainingBatch.concatenate(batches)
    if len(data) == 0:
        raise EmptyInputError("cannot train on an empty batch")
    return data


def denoiser_loss(
    store: ParameterStore, config: DenoiserConfig, part: TrainingBatch
) -> Tensor:
    """Mean squared error between D(e_n, X̃, Z) and e_c over `part`."""

    h0, valid = assemble_input(store, config, part.e_n, part.x_tilde, part.z, part.mask)
    prediction = denoiser_forward(store, config, h0, valid)
    return mean_squared_error(prediction, Tensor(part.e_c))


def denoise_pairs(weights: DenoiserWeights, data: TrainingBatch) -> Array:
    """Denoised embeddings for every item, computed in chunks."""

    outputs = [
        denoise_batch(
            weights,
            data.e_n[start : start + EVAL_CHUNK],
            data.x_tilde[start : start + EVAL_CHUNK],
            data.z[start : start + EVAL_CHUNK],
            data.mask[start : start + EVAL_CHUNK],
        )
        for start in range(0, len(data), EVAL_CHUNK)
    ]
    return np.concatenate(outputs)


def _mse(weights: DenoiserWeights, data: TrainingBatch) -> float:
    diff = denoise_pairs(weights, data) - data.e_c
    return float(np.mean(diff * diff))


def _fit(
    store: ParameterStore,
    config: DenoiserConfig,
    data: TrainingBatch,
    validation: Optional[TrainingBatch],
    epochs: int,
    rng: RngState,
) -> Tuple[DenoiserWeights, LossHistory]:
    history = LossHistory()

    def record() -> DenoiserWeights:
        snapshot = DenoiserWeights.from_store(config, store.copy().freeze())
        try:
            history.train.append(_mse(snapshot, data))
            if validation is not None:
                history.validation.append(_mse(snapshot, validation))
        except NonFiniteError as err:
            raise DivergenceError(err.message) from err
        if not all(math.isfinite(value) for value in history.train + history.validation):
            raise DivergenceError(f"loss became non-finite after {len(history.train) - 1} epochs")
        return snapshot

    weights = record()
    for epoch in range(epochs):
        order = rng.generator.permutation(len(data))
        for start in range(0, len(data), config.batch_size):
            part = data.take(order[start : start + config.batch_size])
            try:
                loss = denoiser_loss(store, config, part)
                backward(loss, store)
            except NonFiniteError as err:
                raise DivergenceError(f"epoch {epoch}: {err.message}") from err
            adam_step(store, config.learning_rate, weight_decay=config.weight_decay)
        weights = record()
        log.info(
            "Denoiser epoch %s: train mse %.6f%s",
            epoch + 1,
            history.train[-1],
            f", validation mse {history.validation[-1]:.6f}" if validation else "",
        )
    return weights, history


def train_denoiser(
    batches: Union[TrainingBatch, Iterable[TrainingBatch]],
    config: DenoiserConfig,
    validation: Optional[TrainingBatch] = None,
) -> Tuple[DenoiserWeights, LossHistory]:
    """
    Train a fresh denoiser with adam_step on the mean squared error to e_c.
    Without an explicit `validation` set, `config.validation_fraction` of the
    items is held out. Runs are deterministic given `config.seed`.
    """

    data = _as_batch(batches)
    if data.x_tilde.shape[2] != config.d_model:
        raise DimensionError(
            f"training width {data.x_tilde.shape[2]} differs from d_model {config.d_model}"
        )
    rng = RngState(config.seed)
    store = init_denoiser_store(config, rng)
    if validation is None and config.validation_fraction > 0:
        data, validation = split_validation(data, config.validation_fraction, rng.spawn(1))
    log.info(
        "Training denoiser on %s items (%s held out) for %s epochs",
        len(data),
        len(validation) if validation is not None else 0,
        config.epochs,
    )
    return _fit(store, config, data, validation, config.epochs, rng.spawn(2))


def finetune_denoiser(
    weights: DenoiserWeights,
    batches: Union[TrainingBatch, Iterable[TrainingBatch]],
    config: Optional[DenoiserConfig] = None,
    epochs: int = 1,
    validation: Optional[TrainingBatch] = None,
) -> Tuple[DenoiserWeights, LossHistory]:
    """
    Continue training a copy of `weights` on new data. Optimizer settings come
    from `config`; the architecture always comes from `weights.config`.
    """

    data = _as_batch(batches)
    settings = config or weights.config
    training = weights.config.copy(
        update={
            "learning_rate": settings.learning_rate,
            "weight_decay": settings.weight_decay,
            "batch_size": settings.batch_size,
        }
    )
    finetuned, history = _fit(
        weights.store.copy(), training, data, validation, epochs, RngState(settings.seed, (3,))
    )
    return DenoiserWeights.from_store(weights.config, finetuned.store), history


def row_cosines(a: Array, b: Array) -> Array:
    norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    dots = (a * b).sum(axis=1)
    return np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)


def evaluate_denoiser(
    weights: DenoiserWeights, batches: Union[TrainingBatch, Iterable[TrainingBatch]]
) -> DenoiseMetrics:
    data = _as_batch(batches)
    denoised = denoise_pairs(weights, data)
    cos_denoised = row_cosines(denoised, data.e_c)
    cos_noisy = row_cosines(data.e_n, data.e_c)
    return DenoiseMetrics(
        mse_denoised=float(np.mean((denoised - data.e_c) ** 2)),
        mse_noisy=float(np.mean((data.e_n - data.e_c) ** 2)),
        cos_denoised=float(cos_denoised.mean()),
        cos_noisy=float(cos_noisy.mean()),
        improved_fraction=float(np.mean(cos_denoised > cos_noisy)),
        count=len(data),
    )
