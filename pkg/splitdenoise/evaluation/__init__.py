"""Empirical privacy measurement: entropy and MI estimates, attacks, geometry."""

from .attacks import attribute_inference, inversion_attack
from .classifier import (
    Classifier,
    accuracy,
    predict_scores,
    roc_auc,
    train_classifier,
)
from .entropy import (
    digamma,
    knn_distance,
    knn_entropy,
    mi_estimate,
    unit_ball_volume,
)
from .geometry import geometry_metrics

__all__ = [
    "Classifier",
    "accuracy",
    "attribute_inference",
    "digamma",
    "geometry_metrics",
    "inversion_attack",
    "knn_distance",
    "knn_entropy",
    "mi_estimate",
    "predict_scores",
    "roc_auc",
    "train_classifier",
    "unit_ball_volume",
]
