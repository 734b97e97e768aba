# pylint: disable= no-self-argument, no-self-use

from pydantic import BaseModel, Field, validator


class EncoderConfig(BaseModel):
    """Sizes and seed of the toy split model."""

    vocab_size: int = Field(1000, gt=0, description="Number of vocabulary rows.")
    dim: int = Field(32, gt=0, description="Token and sentence embedding width d.")
    layers: int = Field(1, ge=0, description="Transformer encoder layers.")
    n_head: int = Field(4, gt=0)
    d_kv: int = Field(8, gt=0, description="Per-head query/key/value width.")
    d_ff: int = Field(64, gt=0, description="Feed-forward hidden width.")
    max_len: int = Field(512, gt=0, description="Longest accepted token sequence.")
    positional: bool = Field(
        True, description="`false` replaces the sinusoidal encodings with zeros."
    )
    init_std: float = Field(0.02, gt=0)
    seed: int = Field(0, ge=0)

    @validator("dim")
    def check_even_width(cls, value: int) -> int:
        """
        Sinusoidal encodings pair sine and cosine columns.
        """

        assert value % 2 == 0, "dim must be even"
        return value

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False
