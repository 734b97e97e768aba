import math

from pydantic import BaseModel, Field, validator

from .validation import check_eta


class PrivacyParams(BaseModel):
    """The user's privacy setting."""

    eta: float = Field(
        math.inf,
        description="The dχ-privacy parameter η. Smaller is more private; `inf` adds no noise.",
    )
    clip_enabled: bool = Field(
        True,
        description="`true` to clip privatized token representations to the vocabulary norm bound.",
    )

    _check_eta: classmethod = validator("eta", allow_reuse=True)(check_eta)

    @property
    def is_noiseless(self) -> bool:
        return math.isinf(self.eta)

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False
