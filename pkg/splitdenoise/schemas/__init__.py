from .denoiser import DenoiseMetrics, DenoiserConfig, LossHistory
from .evaluation import (
    AttackKind,
    AttackReport,
    ClassifierConfig,
    GeometryReport,
    MIEstimate,
)
from .experiment import ExperimentConfig, LabelRule, Method
from .model import EncoderConfig
from .privacy import PrivacyParams
from .protocol import PayloadAccounting
from .report import CSV_HEADER, ReportRow
from .validation import METRIC_NAMES

__all__ = [
    "AttackKind",
    "AttackReport",
    "CSV_HEADER",
    "ClassifierConfig",
    "DenoiseMetrics",
    "DenoiserConfig",
    "EncoderConfig",
    "ExperimentConfig",
    "GeometryReport",
    "LabelRule",
    "LossHistory",
    "METRIC_NAMES",
    "MIEstimate",
    "Method",
    "PayloadAccounting",
    "PrivacyParams",
    "ReportRow",
]
