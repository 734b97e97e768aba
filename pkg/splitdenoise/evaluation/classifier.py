"""
The downstream and attribute-attack classifier: two d -> d fully connected
layers with ReLU, then a logistic readout, trained with adam_step on binary
cross-entropy over standardized features.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special, stats

from ..core.ops import binary_cross_entropy_with_logits, relu
from ..core.params import ParameterStore, adam_step, backward
from ..core.rng import RngState
from ..core.tensor import Array, Tensor
from ..exceptions import DimensionError, EmptyInputError, SingleClassError
from ..schemas.evaluation import ClassifierConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Classifier:
    store: ParameterStore
    mean: Array
    scale: Array

    def logits(self, features: Array) -> Array:
        values = (_features(features) - self.mean) / self.scale
        if values.shape[1] != self.mean.shape[0]:
            raise DimensionError(
                f"feature width {values.shape[1]} differs from {self.mean.shape[0]}"
            )
        return _forward(self.store, Tensor(values)).data


def _features(features: Array) -> Array:
    values = np.asarray(features, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionError(f"features must be N x d, got {values.shape}")
    if values.shape[0] == 0:
        raise EmptyInputError("no feature rows")
    return values


def _labels(labels: Array, count: int) -> Array:
    values = np.asarray(labels, dtype=np.float64).reshape(-1)
    if values.shape[0] != count:
        raise DimensionError(f"{values.shape[0]} labels for {count} feature rows")
    if not np.all((values == 0.0) | (values == 1.0)):
        raise DimensionError("labels must be 0 or 1")
    return values


def _forward(store: ParameterStore, x: Tensor) -> Tensor:
    hidden = relu(x @ store["l1.w"] + store["l1.b"])
    hidden = relu(hidden @ store["l2.w"] + store["l2.b"])
    return (hidden @ store["out.w"] + store["out.b"]).reshape(x.shape[0])


def _init_store(d: int, rng: RngState) -> ParameterStore:
    he = math.sqrt(2.0 / d)
    store = ParameterStore()
    store.add("l1.w", rng.generator.normal(0.0, he, size=(d, d)))
    store.add("l1.b", np.zeros(d))
    store.add("l2.w", rng.generator.normal(0.0, he, size=(d, d)))
    store.add("l2.b", np.zeros(d))
    store.add("out.w", rng.generator.normal(0.0, math.sqrt(1.0 / d), size=(d, 1)))
    store.add("out.b", np.zeros(1))
    return store


def standardize(features: Array) -> Tuple[Array, Array]:
    """Per-column mean and scale; constant columns get scale 1."""

    values = _features(features)
    scale = values.std(axis=0)
    return values.mean(axis=0), np.where(scale > 0, scale, 1.0)


def train_classifier(
    features: Array, labels: Array, config: ClassifierConfig, rng: RngState
) -> Classifier:
    values = _features(features)
    targets = _labels(labels, values.shape[0])
    if np.unique(targets).size < 2:
        raise SingleClassError(f"all {targets.size} training labels are {targets[0]:g}")

    mean, scale = standardize(values)
    standardized = (values - mean) / scale
    store = _init_store(values.shape[1], rng)
    for epoch in range(config.epochs):
        order = rng.generator.permutation(values.shape[0])
        for start in range(0, values.shape[0], config.batch_size):
            rows = order[start : start + config.batch_size]
            loss = binary_cross_entropy_with_logits(
                _forward(store, Tensor(standardized[rows])), targets[rows]
            )
            backward(loss, store)
            adam_step(store, config.learning_rate, weight_decay=config.weight_decay)
        if epoch == config.epochs - 1:
            log.debug("classifier final batch loss %.6f", loss.item())
    return Classifier(store.freeze(), mean, scale)


def predict_scores(classifier: Classifier, features: Array) -> Array:
    """Probability of label 1 for every row."""

    return special.expit(classifier.logits(features))


def accuracy(labels: Array, scores: Array) -> float:
    targets = _labels(labels, np.asarray(scores).shape[0])
    return float(np.mean((np.asarray(scores) >= 0.5) == (targets == 1.0)))


def roc_auc(labels: Array, scores: Array) -> float:
    """Area under the ROC curve from the rank sum of positives; ties get average ranks."""

    values = np.asarray(scores, dtype=np.float64).reshape(-1)
    targets = _labels(labels, values.shape[0])
    positives = int(targets.sum())
    negatives = targets.size - positives
    if positives == 0 or negatives == 0:
        raise SingleClassError("AUC needs both classes")
    ranks = stats.rankdata(values)
    rank_sum = float(ranks[targets == 1.0].sum())
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)
