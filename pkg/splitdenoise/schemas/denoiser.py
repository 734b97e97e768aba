# pylint: disable= no-self-argument, no-self-use

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, validator


class DenoiserConfig(BaseModel):
    """Hyperparameters of the client-side denoiser."""

    d_model: int = Field(32, gt=0, description="Must equal the served embedding width.")
    d_ff: int = Field(64, gt=0)
    d_kv: int = Field(8, gt=0)
    n_head: int = Field(4, gt=0)
    layers: int = Field(2, ge=0)
    max_len: int = Field(512, gt=0, description="Longest token sequence accepted.")
    learning_rate: float = Field(1e-3, gt=0)
    weight_decay: float = Field(0.0, ge=0)
    batch_size: int = Field(32, gt=0)
    epochs: int = Field(2, gt=0)
    validation_fraction: float = Field(0.1, ge=0, lt=1)
    include_noise: bool = Field(
        True,
        description="`false` zeroes the noise block of the input (server-side variant).",
    )
    partition_thresholds: Tuple[float, float] = Field(
        (0.8, 0.2),
        description="Correlation levels separating the high, middle and low η groups.",
    )
    init_std: float = Field(0.02, gt=0)
    seed: int = Field(0, ge=0)

    @validator("partition_thresholds")
    def check_thresholds(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        """
        Thresholds must be decreasing correlation levels in (0, 1).
        """

        high, low = value
        assert 0 < low < high < 1, "partition thresholds must satisfy 0 < low < high < 1"
        return value

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False


class DenoiseMetrics(BaseModel):
    """Validation quality of a denoiser against the clean embeddings."""

    mse_denoised: float
    mse_noisy: float
    cos_denoised: float
    cos_noisy: float
    improved_fraction: float = Field(..., ge=0, le=1)
    count: int = Field(..., ge=0)

    def as_metrics(self) -> Dict[str, float]:
        return {"mse": self.mse_denoised, "cos": self.cos_denoised}


class LossHistory(BaseModel):
    """
    Mean squared error over the whole training and validation sets, measured
    before the first update and after every epoch.
    """

    train: List[float] = []
    validation: List[float] = []

    @property
    def initial(self) -> float:
        return self.train[0]

    @property
    def final(self) -> float:
        return self.train[-1]

    @property
    def final_validation(self) -> Optional[float]:
        return self.validation[-1] if self.validation else None
