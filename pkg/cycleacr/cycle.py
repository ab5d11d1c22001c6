"""Actor-to-context reorganization and context-to-actor enhancement.

Inside this module tensors are token-major: an actor axis first, then a
token axis (frames or memory rows), then channels. Public single-layer
operations accept and return the channel-major layouts of the frontend
(``c x T`` contexts, ``N x c x T`` reorganized contexts).
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from django.conf import settings

from cycleacr.attention import AttentionBlock
from cycleacr.structures import (
    AttentionTraces,
    CycleConfig,
    CycleOutput,
    ReorganizedContext
)
from feature_frontend.structures import ActorFeatures, TemporalContext
from tensor_core import functional as F
from tensor_core.exceptions import DimensionError
from tensor_core.module import Linear, Module
from tensor_core.rng import Rng
from tensor_core.tensor import Parameter, Tensor, default_dtype, parameter

logger = logging.getLogger(__name__)


def position_init_std() -> float:
    return settings.ACTION_HEAD.get("POSITION_INIT_STD", 0.02)


def actor_memory(actors: ActorFeatures) -> Tensor:
    """N x (h*w + 1) x c: each actor's RoI feature followed by its locals."""
    count, channels = actors.roi.shape
    flat_local = F.reshape(actors.local, (count, channels, -1))
    return F.concat(
        [
            F.reshape(actors.roi, (count, 1, channels)),
            F.swapaxes(flat_local, 1, 2),
        ],
        axis=1,
    )


def broadcast_actors(x: Tensor, count: int) -> Tensor:
    """Repeat a shared 1 x ... tensor along a new leading actor axis."""
    return F.take(F.reshape(x, (1, *x.shape)), [0] * count, axis=0)


def _per_actor_context(context: Tensor, count: int) -> Tensor:
    """Token-major N x T x c from a shared c x T or per-actor N x c x T."""
    if context.ndim == 2:
        return broadcast_actors(F.swapaxes(context, 0, 1), count)
    return F.swapaxes(context, 1, 2)


def a2c_r_local(
    context: Tensor,
    memory: Tensor,
    block: AttentionBlock,
    rng: Rng,
    training: Optional[bool] = None,
) -> Tuple[Tensor, Tensor]:
    """Every frame of the context attends to each actor's memory: N x c x T."""
    count = memory.shape[0]
    if count == 0:
        return _empty(count, block.channels, context.shape[-1]), None
    tokens = _per_actor_context(context, count)
    out, weights = block(tokens, memory, rng, training)
    return F.swapaxes(out, 1, 2), weights


def c2a_e(
    actors: Tensor,
    reorganized: Tensor,
    position: Tensor,
    block: AttentionBlock,
    rng: Rng,
    training: Optional[bool] = None,
) -> Tuple[Tensor, Tensor]:
    """Each actor attends to its position-embedded frame contexts: N x c."""
    count, channels = actors.shape
    frames = reorganized.shape[-1]
    if position.shape != (frames, channels):
        raise DimensionError(
            f"position embedding {position.shape} does not match "
            f"{frames} frames of {channels} channels"
        )
    if count == 0:
        return _empty(0, channels), None
    memory = F.add(F.swapaxes(reorganized, 1, 2), position)
    query = F.reshape(actors, (count, 1, channels))
    out, weights = block(query, memory, rng, training)
    return F.reshape(out, (count, channels)), weights


def a2c_r_global(
    global_context: Tensor,
    memory: Tensor,
    block: AttentionBlock,
    rng: Rng,
    training: Optional[bool] = None,
) -> Tuple[Tensor, Tensor]:
    """The pooled context attends to each actor's memory: N x c."""
    count = memory.shape[0]
    channels = block.channels
    if count == 0:
        return _empty(0, channels), None
    if global_context.ndim == 1:
        query = broadcast_actors(
            F.reshape(global_context, (1, channels)), count
        )
    else:
        query = F.reshape(global_context, (count, 1, channels))
    out, weights = block(query, memory, rng, training)
    return F.reshape(out, (count, channels)), weights


def _empty(*shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=default_dtype()))


def _blocks(config: CycleConfig, rng: Rng, stream: int) -> List[AttentionBlock]:
    return [
        AttentionBlock(
            config.channels,
            config.attention_dim,
            config.p_drop,
            rng.derive(stream, layer),
            config.layer_norm_eps,
        )
        for layer in range(config.depth)
    ]


class CycleACR(Module):
    """Local and global actor-context cycles, stacked and fused.

    ``mode`` selects the interaction: ``cycle`` (reorganize then enhance),
    ``c2a`` (actors attend to raw context) or ``a2c`` (reorganize only).
    """

    def __init__(self, config: CycleConfig, rng: Rng):
        self.config = config
        reorganizes = config.mode in ("cycle", "a2c")
        enhances = config.mode in ("cycle", "c2a")
        local, global_ = config.use_local_branch, config.use_global_branch
        self.local_context_blocks = (
            _blocks(config, rng, 1) if local and reorganizes else []
        )
        self.local_actor_blocks = (
            _blocks(config, rng, 2) if local and enhances else []
        )
        self.global_blocks = _blocks(config, rng, 3) if global_ else []
        self.position: Optional[Parameter] = (
            parameter(
                rng.derive(4).normal(
                    0.0, position_init_std(), (config.frames, config.channels)
                ),
                name="position",
            )
            if local and enhances
            else None
        )
        self.fusion = Linear(
            config.channels * config.branch_count, config.channels, rng.derive(5)
        )

    def forward(
        self,
        actors: ActorFeatures,
        context: TemporalContext,
        rng: Rng,
        training: Optional[bool] = None,
    ) -> CycleOutput:
        if training is None:
            training = self.training
        config = self.config
        count, channels = actors.roi.shape
        frames = context.local.shape[1]
        if channels != config.channels:
            raise DimensionError(
                f"cycle expects {config.channels} channels, got {channels}"
            )
        if frames != config.frames:
            raise DimensionError(
                f"cycle expects {config.frames} frames, got {frames}"
            )
        traces = AttentionTraces()
        if count == 0:
            return CycleOutput(
                enhanced=_empty(0, channels),
                reorganized=ReorganizedContext(
                    _empty(0, channels, frames), _empty(0, channels)
                ),
                traces=traces,
            )
        memory = actor_memory(actors)
        roi = F.reshape(actors.roi, (count, 1, channels))
        outputs, actor_stages, context_stages = [], [actors.roi.data.copy()], []
        reorganized_local = _per_actor_context(context.local, count)
        reorganized_global = broadcast_actors(
            F.reshape(context.global_, (1, channels)), count
        )

        if config.use_local_branch:
            tokens = reorganized_local
            for layer, block in enumerate(self.local_context_blocks, start=1):
                tokens, weights = block(tokens, memory, rng, training)
                traces.add("local_a2c", layer, weights)
            reorganized_local = tokens
            if config.mode == "a2c":
                out_local = F.reshape(
                    F.mean_pool(tokens, axis=1), (count, 1, channels)
                )
            else:
                tokens = F.add(tokens, self.position)
                out_local = roi
                for layer, block in enumerate(self.local_actor_blocks, start=1):
                    out_local, weights = block(out_local, tokens, rng, training)
                    traces.add("local_c2a", layer, weights)
                    actor_stages.append(
                        out_local.data.reshape(count, channels).copy()
                    )
            outputs.append(out_local)

        if config.use_global_branch:
            if config.mode == "c2a":
                out_global = roi
                for layer, block in enumerate(self.global_blocks, start=1):
                    out_global, weights = block(
                        out_global, reorganized_global, rng, training
                    )
                    traces.add("global_c2a", layer, weights)
            else:
                out_global = reorganized_global
                context_stages.append(
                    out_global.data.reshape(count, channels).copy()
                )
                for layer, block in enumerate(self.global_blocks, start=1):
                    out_global, weights = block(out_global, memory, rng, training)
                    traces.add("global_a2c", layer, weights)
                    context_stages.append(
                        out_global.data.reshape(count, channels).copy()
                    )
                reorganized_global = out_global
            outputs.append(out_global)

        fused = self.fusion(F.concat(outputs, axis=2))
        return CycleOutput(
            enhanced=F.reshape(fused, (count, channels)),
            reorganized=ReorganizedContext(
                local=F.swapaxes(reorganized_local, 1, 2),
                global_=F.reshape(reorganized_global, (count, channels)),
            ),
            traces=traces,
            actor_stages=actor_stages,
            context_stages=context_stages,
        )
