from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from django.conf import settings

from tensor_core.exceptions import DimensionError, NonFiniteError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def default_dtype() -> np.dtype:
    """Float width for new tensors: f64 under the test runner, f32 otherwise."""
    return np.dtype(getattr(settings, "TENSOR_DTYPE", "float32"))


def check_finite(values: np.ndarray, op_name: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{op_name} produced NaN or Inf values")
    return values


class Tensor:
    """Dense row-major array with a recorded reverse-mode tape.

    Every tensor created by a kernel keeps references to its parents and a
    closure mapping the output gradient to one gradient per parent.
    """

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: Iterable["Tensor"] = (),
        backward_fn: Optional[BackwardFn] = None,
        op_name: str = "leaf",
    ):
        self.data: np.ndarray = check_finite(np.asarray(data), op_name)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = (
            np.zeros_like(self.data) if self.requires_grad else None
        )
        self._parents: tuple = tuple(parents)
        self._backward_fn = backward_fn
        self.op_name = op_name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(
                f"tensor of shape {self.shape} is not a scalar"
            )
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op_name}{req})"


class Parameter(Tensor):
    """Trainable leaf tensor, named within its owning module."""

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True, op_name="parameter")
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def tensor(data, requires_grad: bool = False, dtype=None) -> Tensor:
    return Tensor(
        np.array(data, dtype=dtype or default_dtype()),
        requires_grad=requires_grad,
    )


def parameter(data, name: str = "", dtype=None) -> Parameter:
    return Parameter(np.array(data, dtype=dtype or default_dtype()), name=name)


def op_result(
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward_fn: BackwardFn,
    op_name: str,
) -> Tensor:
    """Wrap a kernel output, recording it on the tape when any parent needs it."""
    requires_grad = any(parent.requires_grad for parent in parents)
    out = Tensor(
        data,
        requires_grad=False,
        parents=parents if requires_grad else (),
        backward_fn=backward_fn if requires_grad else None,
        op_name=op_name,
    )
    out.requires_grad = requires_grad
    return out


def _topological_order(root: Tensor) -> list:
    order, visited = [], set()
    stack = [(root, False)]
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


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``."""
    if loss.data.size != 1:
        raise DimensionError(
            f"backward needs a scalar loss, got shape {loss.shape}"
        )
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node.is_leaf:
            node.grad = node.grad + grad if node.grad is not None else grad
            continue
        node.grad = grad
        parent_grads = node._backward_fn(grad)
        for parent, parent_grad in zip(node._parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            check_finite(parent_grad, f"{node.op_name} backward")
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad
