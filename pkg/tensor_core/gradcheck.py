from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from tensor_core.tensor import Tensor, backward

RELATIVE_FLOOR = 1e-4


@dataclass
class GradientReport:
    max_relative_error: float
    worst_tensor: int
    worst_index: tuple
    checked: int


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), RELATIVE_FLOOR)
    return np.abs(analytic - numeric) / scale


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
) -> GradientReport:
    """Compare reverse-mode gradients with central finite differences.

    ``loss_fn`` must rebuild the graph from the current values of ``tensors``
    and return a scalar. Every element of every tensor is perturbed by +-h.
    """
    for item in tensors:
        item.zero_grad()
    backward(loss_fn())
    analytic = [item.grad.copy() for item in tensors]

    worst = GradientReport(0.0, -1, (), 0)
    for position, item in enumerate(tensors):
        numeric = np.zeros_like(item.data)
        for index in np.ndindex(item.shape):
            original = item.data[index]
            item.data[index] = original + h
            upper = loss_fn().item()
            item.data[index] = original - h
            lower = loss_fn().item()
            item.data[index] = original
            numeric[index] = (upper - lower) / (2.0 * h)
        errors = relative_error(analytic[position], numeric)
        worst.checked += errors.size
        if errors.size and errors.max() > worst.max_relative_error:
            worst.max_relative_error = float(errors.max())
            worst.worst_tensor = position
            worst.worst_index = np.unravel_index(errors.argmax(), errors.shape)
    return worst
