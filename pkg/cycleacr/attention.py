import math
from typing import Tuple

from tensor_core import functional as F
from tensor_core.exceptions import ContractError, DimensionError
from tensor_core.module import Linear, Module
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor


class AttentionBlock(Module):
    """Non-local cross-attention with a normalized residual branch.

    out = query + dropout(W_out(relu(norm(softmax(q k^T / sqrt(d)) v))))
    with q = query W_q, k = memory W_k, v = memory W_v. Leading axes of
    query and memory are batch axes; rows attend independently.
    """

    def __init__(
        self,
        channels: int,
        attention_dim: int,
        p_drop: float,
        rng: Rng,
        eps: float = 1e-5,
    ):
        self.channels, self.attention_dim = channels, attention_dim
        self.p_drop, self.eps = p_drop, eps
        self.query = Linear(channels, attention_dim, rng.derive(1), bias=False)
        self.key = Linear(channels, attention_dim, rng.derive(2), bias=False)
        self.value = Linear(channels, attention_dim, rng.derive(3), bias=False)
        self.output = Linear(attention_dim, channels, rng.derive(4), bias=False)

    def forward(
        self,
        query: Tensor,
        memory: Tensor,
        rng: Rng,
        training: bool = None,
    ) -> Tuple[Tensor, Tensor]:
        if training is None:
            training = self.training
        if memory.ndim < 2 or memory.shape[-2] == 0:
            raise ContractError("attention needs at least one memory row")
        if query.shape[-1] != self.channels or memory.shape[-1] != self.channels:
            raise DimensionError(
                f"attention expects {self.channels} channels, got query "
                f"{query.shape} and memory {memory.shape}"
            )
        queries = self.query(query)
        keys = self.key(memory)
        values = self.value(memory)
        logits = F.scale(
            F.matmul(queries, F.swapaxes(keys, -1, -2)),
            1.0 / math.sqrt(self.attention_dim),
        )
        weights = F.softmax_rows(logits)
        attended = F.matmul(weights, values)
        branch = self.output(F.relu(F.layer_norm(attended, self.eps)))
        branch = F.dropout(branch, self.p_drop, rng, training)
        return F.add(query, branch), weights
