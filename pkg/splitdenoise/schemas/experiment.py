# pylint: disable= no-self-argument, no-self-use

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, root_validator, validator

from .denoiser import DenoiserConfig
from .model import EncoderConfig
from .privacy import PrivacyParams
from .validation import check_etas, check_not_empty


class Method(str, Enum):
    """How the client protects its tokens."""

    SND = "snd"
    TOK_EMB_PRIV = "tok_emb_priv"
    TEXT2TEXT = "text2text"
    NO_NOISE = "no_noise"


class LabelRule(str, Enum):
    """How synthetic sequences are labeled."""

    PRESENCE = "presence"
    RANDOM = "random"


class ExperimentConfig(BaseModel):
    """
    Everything one harness scenario needs. Loaded from a flat TOML file of
    `key = value` lines; command-line flags override file values.
    """

    scenario: str = Field("default", min_length=1)
    methods: List[Method] = Field([Method.SND, Method.TOK_EMB_PRIV])
    etas: List[float] = Field([1.0, 10.0, 100.0])
    seeds: List[int] = Field([0, 1, 2])
    output: str = Field("results.csv", min_length=1)
    registry: str = Field(
        "denoisers", min_length=1, description="Directory of the trained denoiser registry."
    )

    # synthetic corpus
    vocab_size: int = Field(1000, gt=1)
    dim: int = Field(32, gt=0)
    seq_len: int = Field(16, gt=0, le=512)
    corpus_size: int = Field(2000, ge=10)
    label_rule: LabelRule = LabelRule.PRESENCE
    signal_tokens: int = Field(50, gt=0)
    signal_strength: float = Field(3.0, ge=0)
    zipf_exponent: float = Field(1.1, gt=0)
    model_seed: int = Field(0, ge=0)

    # server encoder
    encoder_layers: int = Field(1, ge=0)
    encoder_heads: int = Field(4, gt=0)
    encoder_d_kv: int = Field(8, gt=0)
    encoder_d_ff: int = Field(64, gt=0)

    # denoiser
    d_ff: int = Field(64, gt=0)
    d_kv: int = Field(8, gt=0)
    n_head: int = Field(4, gt=0)
    layers: int = Field(2, ge=0)
    learning_rate: float = Field(1e-3, gt=0)
    batch_size: int = Field(32, gt=0)
    epochs: int = Field(2, gt=0)
    samples_per_sequence: int = Field(1, gt=0)

    # downstream classifier
    classifier_epochs: int = Field(30, gt=0)
    classifier_learning_rate: float = Field(1e-2, gt=0)
    classifier_batch_size: int = Field(64, gt=0)
    test_fraction: float = Field(0.2, gt=0, lt=1)

    # evaluation
    samples: int = Field(2000, gt=1, description="Sample count for MI and geometry runs.")
    k: int = Field(3, gt=0)
    wire_rounding: bool = True
    clip: bool = True

    # model-update drill
    drift: float = Field(0.5, gt=0)
    finetune_fraction: float = Field(0.1, gt=0, le=1)
    finetune_epochs: int = Field(1, gt=0)
    encoder_update_steps: int = Field(200, gt=0)
    encoder_update_learning_rate: float = Field(1e-3, gt=0)

    # corpus similarity
    compare_exponent: float = Field(
        1.5, gt=0, description="Zipf exponent of the corpus compared against the task corpus."
    )

    _check_etas: classmethod = validator("etas", allow_reuse=True)(check_etas)
    _check_seeds: classmethod = validator("seeds", "methods", allow_reuse=True)(
        check_not_empty
    )

    @validator("dim")
    def check_even_width(cls, value: int) -> int:
        assert value % 2 == 0, "dim must be even"
        return value

    @root_validator(skip_on_failure=True)
    def check_signal_set(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """
        The signal token set must leave other tokens in the vocabulary.
        """

        assert (
            values["signal_tokens"] < values["vocab_size"]
        ), "signal_tokens must be smaller than vocab_size"
        return values

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=self.vocab_size,
            dim=self.dim,
            layers=self.encoder_layers,
            n_head=self.encoder_heads,
            d_kv=self.encoder_d_kv,
            d_ff=self.encoder_d_ff,
            seed=self.model_seed,
        )

    def privacy_params(self, eta: float, clip: Optional[bool] = None) -> PrivacyParams:
        """The privacy setting of one η cell; `clip` defaults to the configured one."""

        return PrivacyParams(eta=eta, clip_enabled=self.clip if clip is None else clip)

    def denoiser_config(self, **overrides: Any) -> DenoiserConfig:
        settings: Dict[str, Any] = {
            "d_model": self.dim,
            "d_ff": self.d_ff,
            "d_kv": self.d_kv,
            "n_head": self.n_head,
            "layers": self.layers,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.model_seed,
        }
        settings.update(overrides)
        return DenoiserConfig(**settings)

    class Config:
        """Modifies pydantic behavior."""

        extra = "forbid"
        allow_mutation = False
