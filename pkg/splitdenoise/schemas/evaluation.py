# pylint: disable= no-self-argument, no-self-use

import math
from enum import Enum
from typing import Dict, Optional

from pydantic import BaseModel, Field, root_validator


class AttackKind(str, Enum):
    INVERSION = "inversion"
    ATTRIBUTE = "attribute"


class MIEstimate(BaseModel):
    """A k-nearest-neighbor mutual information estimate, in nats."""

    value: float = Field(..., description="May be slightly negative from sampling noise.")
    count: int = Field(..., gt=1, description="Sample count N.")
    k: int = Field(..., ge=1)
    dim: int = Field(..., ge=1)

    @root_validator(skip_on_failure=True)
    def check_neighbor_order(cls, values: Dict) -> Dict:
        """
        The neighbor order must leave a neighbor to find.
        """

        assert values["count"] > values["k"], "sample count must exceed k"
        return values

    def as_metrics(self) -> Dict[str, float]:
        return {"mi": self.value}


class AttackReport(BaseModel):
    """Success of one privacy attack."""

    kind: AttackKind
    accuracy: float = Field(..., ge=0, le=1)
    auc: Optional[float] = Field(None, ge=0, le=1, description="Attribute attacks only.")
    eta: float = math.inf
    seed: Optional[int] = None
    count: int = Field(..., ge=0)

    def as_metrics(self) -> Dict[str, float]:
        metrics = {"attack_acc": self.accuracy}
        if self.auc is not None:
            metrics["auc"] = self.auc
        return metrics


class GeometryReport(BaseModel):
    """How far apart vocabulary tokens sit compared with how far noise moves them."""

    knn_distance: float = Field(..., ge=0)
    perturbation_distance: float = Field(..., ge=0)
    eta: float
    k: int = Field(..., ge=1)

    def as_metrics(self) -> Dict[str, float]:
        return {"knn_dist": self.knn_distance, "perturb_dist": self.perturbation_distance}


class ClassifierConfig(BaseModel):
    """Training settings of the downstream and attack classifier."""

    epochs: int = Field(30, gt=0)
    learning_rate: float = Field(1e-2, gt=0)
    batch_size: int = Field(64, gt=0)
    weight_decay: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0)

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False
