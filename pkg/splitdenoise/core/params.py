"""
Named parameters, their gradients, and the adaptive-moment optimizer that
updates them.
"""

import logging
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ContractError, DimensionError
from .rng import RngState
from .tensor import Array, Tensor

log = logging.getLogger(__name__)

INIT_STD = 0.02


class ParameterStore:
    """
    Parameter tensors keyed by name, plus first/second moment estimates and a
    step counter for `adam_step`.

    A frozen store refuses optimizer updates and records no graph; its arrays
    are read-only, so one store may be shared by concurrent readers.
    """

    def __init__(self, params: Optional[Mapping[str, Array]] = None) -> None:
        self.params: Dict[str, Tensor] = {}
        self.first_moment: Dict[str, Array] = {}
        self.second_moment: Dict[str, Array] = {}
        self.step = 0
        self.frozen = False
        for name, values in (params or {}).items():
            self.add(name, values)

    def add(self, name: str, values: Array) -> Tensor:
        if self.frozen:
            raise ContractError(f"cannot add {name!r} to a frozen parameter store")
        if name in self.params:
            raise ContractError(f"parameter {name!r} already exists")
        data = np.array(values, dtype=np.float64)
        tensor = Tensor(data, requires_grad=True, name=name)
        self.params[name] = tensor
        self.first_moment[name] = np.zeros_like(data)
        self.second_moment[name] = np.zeros_like(data)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: object) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.params.items())

    def size(self) -> int:
        """Total number of scalar parameters."""

        return sum(tensor.data.size for tensor in self.params.values())

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.grad = None

    def gradient(self, name: str) -> Array:
        """The gradient of `name`, zero when no loss reached it."""

        tensor = self.params[name]
        return np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad

    def snapshot(self) -> Dict[str, Array]:
        """Copies of every parameter array, in insertion order."""

        return {name: tensor.data.copy() for name, tensor in self.params.items()}

    def copy(self) -> "ParameterStore":
        """A fresh, unfrozen store holding copies of these values and a reset optimizer."""

        return ParameterStore(self.snapshot())

    def freeze(self) -> "ParameterStore":
        for tensor in self.params.values():
            tensor.data.setflags(write=False)
            tensor.requires_grad = False
        self.frozen = True
        return self

    def load(self, values: Mapping[str, Array]) -> None:
        """Replace parameter values by name; names and shapes must match exactly."""

        if set(values) != set(self.params):
            missing = sorted(set(self.params) - set(values))
            extra = sorted(set(values) - set(self.params))
            raise ContractError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for name, tensor in self.params.items():
            data = np.array(values[name], dtype=np.float64)
            if data.shape != tensor.shape:
                raise DimensionError(
                    f"parameter {name!r} has shape {tensor.shape}, got {data.shape}"
                )
            tensor.data = data


def init_normal(rng: RngState, shape: Sequence[int], std: float = INIT_STD) -> Array:
    return rng.generator.normal(0.0, std, size=tuple(shape))


def backward(loss: Tensor, store: ParameterStore) -> Dict[str, Array]:
    """
    Populate gradients of `loss` for every parameter in `store`; parameters the
    loss does not reach get zero gradients. Returns the gradients by name.
    """

    store.zero_grad()
    loss.backward()
    grads = {}
    for name, tensor in store.items():
        if tensor.grad is None:
            tensor.grad = np.zeros_like(tensor.data)
        grads[name] = tensor.grad
    return grads


def adam_step(
    store: ParameterStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> ParameterStore:
    """
    One bias-corrected adaptive-moment update with decoupled weight decay.
    Parameters without a gradient are treated as having a zero gradient.
    """

    if store.frozen:
        raise ContractError("cannot update a frozen parameter store")
    if lr <= 0 or not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0 or eps <= 0:
        raise ContractError(
            f"invalid optimizer settings lr={lr}, beta1={beta1}, beta2={beta2}, eps={eps}"
        )

    store.step += 1
    correction1 = 1.0 - beta1**store.step
    correction2 = 1.0 - beta2**store.step
    for name, tensor in store.items():
        grad = store.gradient(name)
        first = beta1 * store.first_moment[name] + (1.0 - beta1) * grad
        second = beta2 * store.second_moment[name] + (1.0 - beta2) * grad * grad
        store.first_moment[name] = first
        store.second_moment[name] = second

        update = (first / correction1) / (np.sqrt(second / correction2) + eps)
        if weight_decay:
            update = update + weight_decay * tensor.data
        tensor.data = tensor.data - lr * update

    log.debug("adam step %s applied to %s parameters", store.step, len(store))
    return store
