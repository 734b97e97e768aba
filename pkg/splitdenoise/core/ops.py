"""
Differentiable building blocks for the encoder, the denoiser, and the
downstream classifier. Every function accepts and returns `Tensor`s and keeps
the last axis as the feature axis.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..exceptions import ContractError, DegenerateMaskError, DimensionError
from .tensor import Array, Tensor

Mask = npt.NDArray[np.bool_]

GELU_COEFF = 0.044715
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
MASKED_SCORE = -1.0e30


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, broadcasting leading axes."""

    return a @ b


def softmax_rows(x: Tensor, mask: Optional[Mask] = None) -> Tensor:
    """
    Softmax over the last axis. Entries where `mask` is False get exactly zero
    weight; `mask` must broadcast against `x`.
    """

    scores = x.data
    if mask is not None:
        scores = np.where(mask, scores, MASKED_SCORE)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    if mask is not None:
        weights = np.where(mask, weights, 0.0)
    weights = weights / weights.sum(axis=-1, keepdims=True)

    def backward(grad: Array) -> Tuple[Array]:
        inner = (grad * weights).sum(axis=-1, keepdims=True)
        return (weights * (grad - inner),)

    return Tensor.from_op(weights, (x,), backward, "softmax")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Normalize each last-axis vector to zero mean and unit variance, then scale and shift.

    `eps = 0` is accepted and gives exact normalization of vectors with nonzero
    variance; a constant vector still normalizes to zero instead of NaN.
    """

    if eps < 0:
        raise ContractError(f"layer_norm eps must be non-negative, got {eps}")
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            f"layer_norm gain/bias must have shape ({width},), "
            f"got {gain.shape} and {bias.shape}"
        )

    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    variance = (centered * centered).mean(axis=-1, keepdims=True)
    scale = variance + eps
    inv_std = np.divide(1.0, np.sqrt(scale), out=np.zeros_like(scale), where=scale > 0)
    normed = centered * inv_std
    gain_data = gain.data

    def backward(grad: Array) -> Tuple[Array, Array, Array]:
        grad_normed = grad * gain_data
        grad_x = inv_std * (
            grad_normed
            - grad_normed.mean(axis=-1, keepdims=True)
            - normed * (grad_normed * normed).mean(axis=-1, keepdims=True)
        )
        reduce_axes = tuple(range(grad.ndim - 1))
        return grad_x, (grad * normed).sum(axis=reduce_axes), grad.sum(axis=reduce_axes)

    return Tensor.from_op(normed * gain_data + bias.data, (x, gain, bias), backward, "layer_norm")


def activation(x: Tensor) -> Tensor:
    """GELU, tanh form."""

    data = x.data
    inner = SQRT_2_OVER_PI * (data + GELU_COEFF * data**3)
    tanh_inner = np.tanh(inner)

    def backward(grad: Array) -> Tuple[Array]:
        d_inner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEFF * data**2)
        local = 0.5 * (1.0 + tanh_inner) + 0.5 * data * (1.0 - tanh_inner**2) * d_inner
        return (grad * local,)

    return Tensor.from_op(0.5 * data * (1.0 + tanh_inner), (x,), backward, "gelu")


def relu(x: Tensor) -> Tensor:
    data = x.data

    def backward(grad: Array) -> Tuple[Array]:
        return (grad * (data > 0.0),)

    return Tensor.from_op(np.maximum(data, 0.0), (x,), backward, "relu")


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    """Concatenate along `axis`."""

    if not tensors:
        raise ContractError("concat needs at least one tensor")
    sizes = [tensor.shape[axis] for tensor in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(grad: Array) -> Sequence[Array]:
        return np.split(grad, bounds, axis=axis)

    return Tensor.from_op(
        np.concatenate([tensor.data for tensor in tensors], axis=axis),
        tensors,
        backward,
        "concat",
    )


def masked_mean(x: Tensor, mask: Mask) -> Tensor:
    """Mean over axis -2 of `x` (..., s, d) restricted to positions where `mask` (..., s) holds."""

    weights = mask.astype(np.float64)
    counts = weights.sum(axis=-1, keepdims=True)
    if np.any(counts == 0):
        raise DegenerateMaskError("pooling mask selects no position")
    return (x * weights[..., None]).sum(axis=-2) / Tensor(counts)


def multi_head_attention(
    h: Tensor,
    w_q: Tensor,
    w_k: Tensor,
    w_v: Tensor,
    w_o: Tensor,
    n_head: int,
    mask: Optional[Mask] = None,
) -> Tensor:
    """
    Scaled dot-product self-attention.

    `h` is (..., s, d_model); `w_q`, `w_k`, `w_v` are (n_head, d_model, d_kv);
    `w_o` is (n_head * d_kv, d_model); `mask` is a boolean (..., s) marking valid
    key positions.
    """

    d_model = h.shape[-1]
    expected = (n_head, d_model, w_q.shape[-1])
    for weight in (w_q, w_k, w_v):
        if weight.shape != expected:
            raise DimensionError(
                f"attention projection has shape {weight.shape}, expected {expected}"
            )
    d_kv = expected[2]
    if w_o.shape != (n_head * d_kv, d_model):
        raise DimensionError(
            f"attention output projection has shape {w_o.shape}, "
            f"expected {(n_head * d_kv, d_model)}"
        )

    key_mask: Optional[Mask] = None
    if mask is not None:
        if mask.shape != h.shape[:-1]:
            raise DimensionError(
                f"attention mask has shape {mask.shape}, expected {h.shape[:-1]}"
            )
        if not np.all(mask.any(axis=-1)):
            raise DegenerateMaskError("every position is masked")
        key_mask = mask[..., None, None, :]

    leading = h.shape[:-2]
    seq = h.shape[-2]
    # (..., 1, s, d_model) broadcasts against the (n_head, d_model, d_kv) projections
    expanded = h.reshape(*leading, 1, seq, d_model)
    query = expanded @ w_q
    key = expanded @ w_k
    value = expanded @ w_v

    scores = (query @ key.swapaxes(-1, -2)) * (1.0 / math.sqrt(d_kv))
    weights = softmax_rows(scores, key_mask)
    context = (weights @ value).swapaxes(-3, -2)
    merged = context.reshape(*leading, seq, n_head * d_kv)
    return merged @ w_o


def mean_squared_error(prediction: Tensor, target: Tensor) -> Tensor:
    """Mean of squared differences over every element."""

    if prediction.shape != target.shape:
        raise DimensionError(
            f"prediction shape {prediction.shape} differs from target {target.shape}"
        )
    diff = prediction - target
    return (diff * diff).mean()


def binary_cross_entropy_with_logits(logits: Tensor, labels: Array) -> Tensor:
    """Mean logistic loss; `labels` holds 0/1 values shaped like `logits`."""

    if logits.shape != labels.shape:
        raise DimensionError(f"logits {logits.shape} and labels {labels.shape} differ")
    data = logits.data
    count = data.size
    losses = np.logaddexp(0.0, data) - labels * data

    def backward(grad: Array) -> Tuple[Array]:
        probs = 0.5 * (1.0 + np.tanh(0.5 * data))
        return (grad * (probs - labels) / count,)

    return Tensor.from_op(np.asarray(losses.mean()), (logits,), backward, "bce")
