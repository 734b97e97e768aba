"""Dense tensor numerics with reverse-mode differentiation."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .ops import (
    activation,
    binary_cross_entropy_with_logits,
    concat,
    layer_norm,
    masked_mean,
    matmul,
    mean_squared_error,
    multi_head_attention,
    relu,
    softmax_rows,
)
from .params import ParameterStore, adam_step, backward, init_normal
from .rng import RngState
from .tensor import Array, Tensor

__all__ = [
    "Array",
    "ParameterStore",
    "RngState",
    "Tensor",
    "activation",
    "adam_step",
    "backward",
    "binary_cross_entropy_with_logits",
    "concat",
    "grad_check",
    "init_normal",
    "layer_norm",
    "load_checkpoint",
    "masked_mean",
    "matmul",
    "mean_squared_error",
    "multi_head_attention",
    "relu",
    "save_checkpoint",
    "softmax_rows",
]
