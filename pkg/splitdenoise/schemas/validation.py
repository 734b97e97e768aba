import math
from typing import List

METRIC_NAMES = frozenset(
    {
        "acc",
        "auc",
        "mse",
        "cos",
        "mi",
        "attack_acc",
        "bytes_up",
        "bytes_down",
        "wall_ms",
        "rho",
        "knn_dist",
        "perturb_dist",
        "corr",
    }
)


def check_eta(value: float) -> float:
    """
    Validate that η is positive; `inf` selects the no-noise arm.
    """

    assert not math.isnan(value) and value > 0, "eta must be positive"
    return value


def check_etas(values: List[float]) -> List[float]:
    """
    Validate a non-empty list of positive η values.
    """

    assert len(values) > 0, "etas must not be empty"
    for value in values:
        check_eta(value)
    return values


def check_not_empty(values: List) -> List:
    assert len(values) > 0, "list must not be empty"
    return values


def check_metric_name(value: str) -> str:
    """
    Validate that a report metric belongs to the closed metric set.
    """

    assert value in METRIC_NAMES, f"metric must be one of {sorted(METRIC_NAMES)}"
    return value
