"""Privacy attacks against privatized token representations."""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from ..core.rng import RngState
from ..core.tensor import Array
from ..exceptions import DimensionError
from ..model.vocab import TokenIds, VocabEmbeddingTable, as_token_ids, nearest_tokens
from ..schemas.evaluation import AttackKind, AttackReport, ClassifierConfig
from .classifier import accuracy, predict_scores, roc_auc, train_classifier

log = logging.getLogger(__name__)


def inversion_attack(
    x_tilde: Array,
    table: VocabEmbeddingTable,
    truth: Union[Sequence[int], TokenIds],
    eta: float = math.inf,
    seed: Optional[int] = None,
) -> AttackReport:
    """
    Map every privatized row to its nearest vocabulary row and report the
    fraction that recovers the true token id.
    """

    guesses = nearest_tokens(x_tilde, table)
    expected = as_token_ids(truth)
    if expected.shape != guesses.shape:
        raise DimensionError(f"{guesses.shape[0]} rows but {expected.shape[0]} true ids")
    hits = float(np.mean(guesses == expected)) if guesses.size else 0.0
    log.debug("inversion attack at eta %s: %.4f of %s tokens", eta, hits, guesses.size)
    return AttackReport(
        kind=AttackKind.INVERSION, accuracy=hits, eta=eta, seed=seed, count=int(guesses.size)
    )


def attribute_inference(
    train_features: Array,
    train_labels: Array,
    test_features: Array,
    test_labels: Array,
    config: ClassifierConfig,
    rng: RngState,
    eta: float = math.inf,
    seed: Optional[int] = None,
) -> AttackReport:
    """
    Train the classifier on privatized, mean-pooled representations and
    report its test accuracy and AUC for the hidden attribute.
    """

    classifier = train_classifier(train_features, train_labels, config, rng)
    scores = predict_scores(classifier, test_features)
    return AttackReport(
        kind=AttackKind.ATTRIBUTE,
        accuracy=accuracy(test_labels, scores),
        auc=roc_auc(test_labels, scores),
        eta=eta,
        seed=seed,
        count=int(scores.shape[0]),
    )
