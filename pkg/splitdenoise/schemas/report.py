from pydantic import BaseModel, Field, validator

from .validation import check_metric_name

CSV_HEADER = ("scenario", "method", "eta", "seed", "metric", "value")


class ReportRow(BaseModel):
    """One measured value of one experiment cell."""

    scenario: str = Field(..., min_length=1)
    method: str = Field(..., min_length=1)
    eta: float = Field(..., description="The privacy parameter of the cell; `inf` for no noise.")
    seed: int
    metric: str = Field(..., description="A name from the closed metric set.")
    value: float

    _check_metric_name: classmethod = validator("metric", allow_reuse=True)(
        check_metric_name
    )

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False
