from .baselines import text2text_privatize, tok_emb_priv_baseline
from .bounds import log_density_ratio, server_mse_lower_bound
from .mechanism import (
    INFINITE_ETA,
    ClipBound,
    NoiseSample,
    clip_privatized,
    effective_noise,
    privatization_correlation,
    privatize,
    sample_noise,
    sample_noise_matrix,
)

__all__ = [
    "INFINITE_ETA",
    "ClipBound",
    "NoiseSample",
    "clip_privatized",
    "effective_noise",
    "log_density_ratio",
    "privatization_correlation",
    "privatize",
    "sample_noise",
    "sample_noise_matrix",
    "server_mse_lower_bound",
    "text2text_privatize",
    "tok_emb_priv_baseline",
]
