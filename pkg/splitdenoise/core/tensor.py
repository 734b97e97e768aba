"""
Dense float64 tensors with reverse-mode differentiation.

A `Tensor` wraps a numpy array. Operations on tensors that require gradients
record their parents and a backward closure; `Tensor.backward()` walks the
recorded graph in reverse topological order and accumulates gradients into the
leaf tensors. Tensors that do not require gradients record nothing, so plain
inference builds no graph.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from ..exceptions import ContractError, DimensionError, NonFiniteError

Array = npt.NDArray[np.float64]
Operand = Union["Tensor", float, int, Array]
BackwardFn = Callable[[Array], Sequence[Optional[Array]]]


def unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    """Sum `grad` over the axes that broadcasting expanded to reach `shape`."""

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def ensure_finite(values: Array, op_name: str) -> Array:
    """Raise `NonFiniteError` if `values` holds NaN or Inf."""

    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{op_name} produced NaN or Inf")
    return values


class Tensor:
    """A node in the differentiation graph."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    __array_priority__ = 1000

    def __init__(
        self,
        data: Union[Array, float, Sequence[float], Sequence[Sequence[float]]],
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Optional[Array] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None

    @classmethod
    def from_op(
        cls,
        data: Array,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op_name: str,
    ) -> "Tensor":
        """
        Build the result of an operation, recording the graph only when a
        parent requires gradients.
        """

        out = cls(ensure_finite(data, op_name))
        if any(parent.requires_grad for parent in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs one element, tensor has {self.data.size}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> Array:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # elementwise arithmetic

    def __add__(self, other: Operand) -> "Tensor":
        rhs = lift(other)
        a_shape, b_shape = self.shape, rhs.shape

        def backward(grad: Array) -> Tuple[Array, Array]:
            return unbroadcast(grad, a_shape), unbroadcast(grad, b_shape)

        return Tensor.from_op(self.data + rhs.data, (self, rhs), backward, "add")

    def __radd__(self, other: Operand) -> "Tensor":
        return lift(other) + self

    def __neg__(self) -> "Tensor":
        def backward(grad: Array) -> Tuple[Array]:
            return (-grad,)

        return Tensor.from_op(-self.data, (self,), backward, "neg")

    def __sub__(self, other: Operand) -> "Tensor":
        return self + (-lift(other))

    def __rsub__(self, other: Operand) -> "Tensor":
        return lift(other) + (-self)

    def __mul__(self, other: Operand) -> "Tensor":
        rhs = lift(other)
        a_data, b_data = self.data, rhs.data

        def backward(grad: Array) -> Tuple[Array, Array]:
            return (
                unbroadcast(grad * b_data, a_data.shape),
                unbroadcast(grad * a_data, b_data.shape),
            )

        return Tensor.from_op(a_data * b_data, (self, rhs), backward, "mul")

    def __rmul__(self, other: Operand) -> "Tensor":
        return lift(other) * self

    def __truediv__(self, other: Operand) -> "Tensor":
        rhs = lift(other)
        a_data, b_data = self.data, rhs.data

        def backward(grad: Array) -> Tuple[Array, Array]:
            return (
                unbroadcast(grad / b_data, a_data.shape),
                unbroadcast(-grad * a_data / (b_data * b_data), b_data.shape),
            )

        return Tensor.from_op(a_data / b_data, (self, rhs), backward, "div")

    def __matmul__(self, other: "Tensor") -> "Tensor":
        a_data, b_data = self.data, other.data
        if a_data.ndim < 2 or b_data.ndim < 2:
            raise DimensionError("matmul operands must have at least two dimensions")
        if a_data.shape[-1] != b_data.shape[-2]:
            raise DimensionError(
                f"inner dimensions differ: {a_data.shape} @ {b_data.shape}"
            )

        def backward(grad: Array) -> Tuple[Array, Array]:
            grad_a = grad @ np.swapaxes(b_data, -1, -2)
            grad_b = np.swapaxes(a_data, -1, -2) @ grad
            return unbroadcast(grad_a, a_data.shape), unbroadcast(grad_b, b_data.shape)

        return Tensor.from_op(a_data @ b_data, (self, other), backward, "matmul")

    # reductions and reshaping

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        in_shape = self.shape

        def backward(grad: Array) -> Tuple[Array]:
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            return (np.broadcast_to(grad, in_shape).copy(),)

        return Tensor.from_op(
            np.asarray(self.data.sum(axis=axis, keepdims=keepdims)),
            (self,),
            backward,
            "sum",
        )

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        in_shape = self.shape

        def backward(grad: Array) -> Tuple[Array]:
            return (grad.reshape(in_shape),)

        return Tensor.from_op(self.data.reshape(shape), (self,), backward, "reshape")

    def swapaxes(self, axis1: int, axis2: int) -> "Tensor":
        def backward(grad: Array) -> Tuple[Array]:
            return (np.swapaxes(grad, axis1, axis2),)

        return Tensor.from_op(
            np.swapaxes(self.data, axis1, axis2), (self,), backward, "swapaxes"
        )

    def __getitem__(
        self, index: Union[int, slice, Array, Tuple[Union[int, slice, Array], ...]]
    ) -> "Tensor":
        in_shape = self.shape

        def backward(grad: Array) -> Tuple[Array]:
            full = np.zeros(in_shape, dtype=np.float64)
            np.add.at(full, index, grad)
            return (full,)

        return Tensor.from_op(np.array(self.data[index]), (self,), backward, "index")

    # differentiation

    def backward(self) -> None:
        """
        Accumulate d(self)/d(leaf) into `.grad` of every reachable leaf tensor
        that requires gradients. `self` must hold a single element.
        """

        if self.data.size != 1:
            raise ContractError(
                f"backward() needs a scalar loss, got shape {self.shape}"
            )
        if not self.requires_grad:
            return

        order = self._topological_order()
        pending: Dict[int, Array] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node._backward is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parent_grad
                else:
                    pending[key] = parent_grad

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order


def lift(value: Operand) -> Tensor:
    """Wrap constants as gradient-free tensors."""

    return value if isinstance(value, Tensor) else Tensor(value)
