"""SGD with Nesterov momentum, linear warmup and step decay."""
import bisect
from typing import Dict, List, Tuple

import numpy as np

from harness.config import OptimizerConfig
from tensor_core.tensor import Parameter


class StepSchedule:
    """lr(s) = base * s / warmup during warmup, then base * gamma^k past k milestones."""

    def __init__(self, config: OptimizerConfig):
        self.base = config.lr
        self.warmup = config.warmup_steps
        self.milestones = sorted(config.milestones)
        self.gamma = config.gamma

    def __call__(self, step: int) -> float:
        if step < self.warmup:
            return self.base * step / self.warmup
        passed = bisect.bisect_right(self.milestones, step)
        return self.base * self.gamma ** passed


def multiplier_for(name: str, multipliers: Dict[str, float]) -> float:
    """Multiplier of the longest parameter-name prefix that matches."""
    matches = [prefix for prefix in multipliers if name.startswith(prefix)]
    if not matches:
        return 1.0
    return multipliers[max(matches, key=len)]


class SGD:
    def __init__(
        self,
        named_parameters: List[Tuple[str, Parameter]],
        config: OptimizerConfig,
    ):
        self.config = config
        self.groups = [
            (param, multiplier_for(name, config.lr_multipliers))
            for name, param in named_parameters
        ]
        self.momentum_buffers: Dict[int, np.ndarray] = {}

    def zero_grad(self) -> None:
        for param, _ in self.groups:
            param.zero_grad()

    def step(self, lr: float) -> None:
        config = self.config
        for param, multiplier in self.groups:
            if param.grad is None:
                continue
            grad = param.grad
            if config.weight_decay:
                grad = grad + config.weight_decay * param.data
            key = id(param)
            if config.momentum:
                buffer = self.momentum_buffers.get(key)
                if buffer is None:
                    buffer = grad.copy()
                else:
                    buffer = config.momentum * buffer + grad
                self.momentum_buffers[key] = buffer
                grad = grad + config.momentum * buffer if config.nesterov else buffer
            param.data -= (lr * multiplier) * grad
