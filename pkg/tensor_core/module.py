from typing import Dict, Iterator, Tuple

import numpy as np

from tensor_core import functional as F
from tensor_core.exceptions import ConfigError, DimensionError
from tensor_core.rng import Rng
from tensor_core.tensor import Parameter, Tensor, default_dtype, parameter


class Module:
    """Container of named parameters and child modules.

    Children are discovered from instance attributes: a ``Parameter``, a
    ``Module`` or a list of modules.
    """

    training: bool = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def children(self) -> Iterator[Tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{index}", item

    def named_parameters(self, prefix: str = "") -> Iterator[
        Tuple[str, Parameter]
    ]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
        for name, child in self.children():
            yield from child.named_parameters(prefix=f"{prefix}{name}.")

    def parameters(self) -> list:
        return [param for _, param in self.named_parameters()]

    def train(self) -> "Module":
        self.training = True
        for _, child in self.children():
            child.train()
        return self

    def eval(self) -> "Module":
        self.training = False
        for _, child in self.children():
            child.eval()
        return self

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {}
        for name, param in self.named_parameters():
            if name in state:
                raise ConfigError(f"duplicate parameter name {name!r}")
            state[name] = param.data.copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        if missing:
            raise ConfigError(f"state is missing parameters: {missing}")
        for name, param in params.items():
            values = np.asarray(state[name])
            if values.shape != param.shape:
                raise DimensionError(
                    f"parameter {name!r} expects {param.shape}, "
                    f"got {values.shape}"
                )
            param.data = values.astype(param.dtype)
            param.zero_grad()


def uniform_fan_in(rng: Rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape).astype(default_dtype())


class Linear(Module):
    """Position-wise linear map ``x @ weight + bias`` (a 1x1 convolution)."""

    def __init__(self, in_dim: int, out_dim: int, rng: Rng, bias: bool = True):
        self.in_dim, self.out_dim = in_dim, out_dim
        self.weight = parameter(
            uniform_fan_in(rng, in_dim, (in_dim, out_dim)), name="weight"
        )
        self.bias = (
            parameter(np.zeros((1, out_dim)), name="bias") if bias else None
        )

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise DimensionError(
                f"linear map expects {self.in_dim} input channels, "
                f"got {x.shape}"
            )
        squeeze = x.ndim == 1
        if squeeze:
            x = F.reshape(x, (1, self.in_dim))
        out = F.matmul(x, self.weight)
        if self.bias is not None:
            out = F.add(out, self.bias)
        if squeeze:
            out = F.reshape(out, (self.out_dim,))
        return out
