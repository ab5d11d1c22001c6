"""Forward kernels with their reverse-mode rules.

Each kernel returns a new Tensor; gradients flow back through the closure
recorded by ``op_result``.
"""
from typing import List, Sequence

import numpy as np

from tensor_core.exceptions import DimensionError, ParameterError
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor, op_result

BCE_CLAMP = 1e-12


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"axis {axis} out of range for rank {ndim}")
    return axis % ndim


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise DimensionError(
            f"cannot add shapes {a.shape} and {b.shape}"
        ) from exc

    def backward_fn(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return op_result(out, (a, b), backward_fn, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data - b.data
    except ValueError as exc:
        raise DimensionError(
            f"cannot subtract shapes {a.shape} and {b.shape}"
        ) from exc

    def backward_fn(grad):
        return _unbroadcast(grad, a.shape), -_unbroadcast(grad, b.shape)

    return op_result(out, (a, b), backward_fn, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise DimensionError(
            f"cannot multiply shapes {a.shape} and {b.shape}"
        ) from exc

    def backward_fn(grad):
        return (
            _unbroadcast(grad * b.data, a.shape),
            _unbroadcast(grad * a.data, b.shape),
        )

    return op_result(out, (a, b), backward_fn, "mul")


def scale(x: Tensor, factor: float) -> Tensor:
    def backward_fn(grad):
        return (grad * factor,)

    return op_result(x.data * factor, (x,), backward_fn, "scale")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.shape} x {b.shape}"
        )
    out = np.matmul(a.data, b.data)

    def backward_fn(grad):
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return op_result(out, (a, b), backward_fn, "matmul")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(
            f"cannot reshape {x.shape} into {tuple(shape)}"
        ) from exc

    def backward_fn(grad):
        return (grad.reshape(x.shape),)

    return op_result(out, (x,), backward_fn, "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward_fn(grad):
        return (np.transpose(grad, inverse),)

    return op_result(np.transpose(x.data, axes), (x,), backward_fn, "transpose")


def swapaxes(x: Tensor, first: int, second: int) -> Tensor:
    axes = list(range(x.ndim))
    first, second = _normalize_axis(first, x.ndim), _normalize_axis(
        second, x.ndim
    )
    axes[first], axes[second] = axes[second], axes[first]
    return transpose(x, axes)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward_fn(grad):
        return (grad * mask,)

    return op_result(np.where(mask, x.data, 0), (x,), backward_fn, "relu")


def sigmoid(x: Tensor) -> Tensor:
    values = x.data
    out = np.empty_like(values)
    positive = values >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-values[positive]))
    exp_values = np.exp(values[~positive])
    out[~positive] = exp_values / (1.0 + exp_values)

    def backward_fn(grad):
        return (grad * out * (1.0 - out),)

    return op_result(out, (x,), backward_fn, "sigmoid")


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, stabilized by the row maximum."""
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError(f"softmax over an empty row, shape {x.shape}")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    exp_values = np.exp(shifted)
    out = exp_values / exp_values.sum(axis=-1, keepdims=True)

    def backward_fn(grad):
        inner = (grad * out).sum(axis=-1, keepdims=True)
        return (out * (grad - inner),)

    return op_result(out, (x,), backward_fn, "softmax_rows")


def layer_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Zero mean, unit variance over the last (channel) axis."""
    if x.ndim == 0 or x.shape[-1] < 2:
        raise DimensionError(
            f"layer_norm needs a channel axis of size >= 2, got {x.shape}"
        )
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    out = centered * inv_std

    def backward_fn(grad):
        grad_mean = grad.mean(axis=-1, keepdims=True)
        proj = (grad * out).mean(axis=-1, keepdims=True)
        return (inv_std * (grad - grad_mean - out * proj),)

    return op_result(out, (x,), backward_fn, "layer_norm")


def dropout(x: Tensor, p: float, rng: Rng, training: bool) -> Tensor:
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)

    def backward_fn(grad):
        return (grad * keep,)

    return op_result(x.data * keep, (x,), backward_fn, "dropout")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    axis = _normalize_axis(axis, tensors[0].ndim)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(
            f"cannot concat shapes {[t.shape for t in tensors]}"
        ) from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return op_result(out, tuple(tensors), backward_fn, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("stack needs at least one tensor")
    expanded = [
        reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors
    ]
    return concat(expanded, axis=axis)


def split(x: Tensor, sections: Sequence[int], axis: int = 0) -> List[Tensor]:
    """Split along ``axis`` into consecutive pieces of the given sizes."""
    axis = _normalize_axis(axis, x.ndim)
    if sum(sections) != x.shape[axis]:
        raise DimensionError(
            f"sections {list(sections)} do not cover axis of size "
            f"{x.shape[axis]}"
        )
    pieces, start = [], 0
    for size in sections:
        index = [slice(None)] * x.ndim
        index[axis] = slice(start, start + size)
        pieces.append(_slice(x, tuple(index)))
        start += size
    return pieces


def _slice(x: Tensor, index: tuple) -> Tensor:
    def backward_fn(grad):
        full = np.zeros_like(x.data)
        full[index] = grad
        return (full,)

    return op_result(x.data[index].copy(), (x,), backward_fn, "slice")


def take(x: Tensor, indices: Sequence[int], axis: int = 0) -> Tensor:
    axis = _normalize_axis(axis, x.ndim)
    indices = np.asarray(indices, dtype=np.int64)

    def backward_fn(grad):
        full = np.zeros_like(x.data)
        np.add.at(
            np.moveaxis(full, axis, 0), indices, np.moveaxis(grad, axis, 0)
        )
        return (full,)

    return op_result(
        np.take(x.data, indices, axis=axis), (x,), backward_fn, "take"
    )


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, x.shape).copy(),)

    return op_result(np.asarray(out), (x,), backward_fn, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[a] for a in axes]))
    if count == 0:
        raise DimensionError(f"mean over an empty axis of shape {x.shape}")
    return scale(sum_(x, axis=axis, keepdims=keepdims), 1.0 / count)


def mean_pool(x: Tensor, axis: int) -> Tensor:
    return mean(x, axis=_normalize_axis(axis, x.ndim))


def max_pool(x: Tensor, axis: int) -> Tensor:
    """Maximum along one axis; the gradient goes to the first maximal entry."""
    axis = _normalize_axis(axis, x.ndim)
    if x.shape[axis] == 0:
        raise DimensionError(f"max over an empty axis of shape {x.shape}")
    argmax = np.expand_dims(x.data.argmax(axis=axis), axis)
    out = np.take_along_axis(x.data, argmax, axis=axis).squeeze(axis)

    def backward_fn(grad):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, argmax, np.expand_dims(grad, axis), axis=axis)
        return (full,)

    return op_result(out, (x,), backward_fn, "max_pool")


def binary_cross_entropy(probs: Tensor, targets: Tensor) -> Tensor:
    """Elementwise BCE of probabilities against {0, 1} targets."""
    if probs.shape != targets.shape:
        raise DimensionError(
            f"probs {probs.shape} and targets {targets.shape} disagree"
        )
    clamp = max(BCE_CLAMP, float(np.finfo(probs.dtype).eps))
    clipped = np.clip(probs.data, clamp, 1.0 - clamp)
    labels = targets.data
    out = -(labels * np.log(clipped) + (1.0 - labels) * np.log1p(-clipped))

    def backward_fn(grad):
        return (grad * (clipped - labels) / (clipped * (1.0 - clipped)), None)

    return op_result(out, (probs, targets), backward_fn, "bce")
