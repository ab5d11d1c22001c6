import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cycleacr.attention import AttentionBlock
from cycleacr.structures import AttentionTraces
from feature_frontend.structures import ActorBox
from tensor_core import functional as F
from tensor_core.exceptions import ConfigError, DimensionError
from tensor_core.module import Linear, Module
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor, default_dtype

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeadConfig:
    channels: int = 32
    attention_dim: int = 32
    num_classes: int = 8
    depth: int = 2
    p_drop: float = 0.2
    use_bank: bool = True
    layer_norm_eps: float = 1e-5

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError(f"interaction depth must be >= 1, got {self.depth}")
        if self.num_classes < 1:
            raise ConfigError(f"need at least one class, got {self.num_classes}")
        if self.attention_dim < 2:
            raise ConfigError(
                f"attention dim must be >= 2, got {self.attention_dim}"
            )


def _as_trace(weights: Tensor) -> Tensor:
    """Actor-first layout: each query actor becomes one row of one query."""
    count = weights.shape[0]
    return Tensor(weights.data.reshape(count, 1, -1))


def instance_interact(
    actors: Tensor,
    bank_feats: Optional[Tensor],
    clip_blocks: Sequence[AttentionBlock],
    bank_blocks: Sequence[AttentionBlock],
    rng: Rng,
    training: Optional[bool] = None,
    traces: Optional[AttentionTraces] = None,
) -> Tensor:
    """Alternate clip self-attention and bank cross-attention per depth step."""
    if not clip_blocks:
        raise ConfigError("instance interaction needs depth >= 1")
    count, channels = actors.shape
    if count == 0:
        return Tensor(np.zeros((0, channels), dtype=default_dtype()))
    use_bank = (
        bank_feats is not None and bank_feats.shape[0] > 0 and bool(bank_blocks)
    )
    out = actors
    for layer, clip_block in enumerate(clip_blocks, start=1):
        out, weights = clip_block(out, out, rng, training)
        if traces is not None:
            traces.add("clip", layer, _as_trace(weights))
        if use_bank:
            out, weights = bank_blocks[layer - 1](out, bank_feats, rng, training)
            if traces is not None:
                traces.add("bank", layer, _as_trace(weights))
    return out


class InteractionHead(Module):
    """Instance interaction over clip actors and bank neighbours."""

    def __init__(self, config: HeadConfig, rng: Rng):
        self.config = config
        self.clip_blocks = self._blocks(rng, 1)
        self.bank_blocks = self._blocks(rng, 2) if config.use_bank else []

    def _blocks(self, rng: Rng, stream: int) -> List[AttentionBlock]:
        config = self.config
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

    def forward(
        self,
        actors: Tensor,
        bank_feats: Optional[Tensor],
        rng: Rng,
        training: Optional[bool] = None,
    ) -> Tuple[Tensor, AttentionTraces]:
        traces = AttentionTraces()
        out = instance_interact(
            actors,
            bank_feats,
            self.clip_blocks,
            self.bank_blocks,
            rng,
            training if training is not None else self.training,
            traces,
        )
        return out, traces


class Classifier(Module):
    """Linear map to K logits followed by an independent sigmoid per class."""

    def __init__(self, channels: int, num_classes: int, rng: Rng):
        if num_classes < 1:
            raise ConfigError(f"need at least one class, got {num_classes}")
        self.linear = Linear(channels, num_classes, rng)

    def forward(self, actors: Tensor) -> Tensor:
        return F.sigmoid(self.linear(actors))


def classify(actors: Tensor, classifier: Classifier) -> Tensor:
    return classifier(actors)


@dataclass
class ActionScores:
    actor_ids: List[int]
    probs: np.ndarray
    fused: np.ndarray

    def ranking(self, row: int) -> List[int]:
        return list(np.argsort(-self.fused[row], kind="stable"))


def fuse_scores(
    probs: Tensor,
    boxes: Sequence[ActorBox],
    threshold: Optional[float] = None,
) -> ActionScores:
    """Final scores are box confidence times class probability.

    With a threshold, boxes below it score zero on every class.
    """
    values = probs.data if isinstance(probs, Tensor) else np.asarray(probs)
    if values.shape[0] != len(boxes):
        raise DimensionError(
            f"{values.shape[0]} probability rows for {len(boxes)} boxes"
        )
    confidence = np.array(
        [box.confidence for box in boxes], dtype=values.dtype
    ).reshape(-1, 1)
    if threshold is not None:
        kept = confidence >= threshold
        dropped = int((~kept).sum())
        if dropped:
            logger.debug("%d boxes below confidence %.2f", dropped, threshold)
        confidence = np.where(kept, confidence, 0.0)
    return ActionScores(
        actor_ids=[box.id for box in boxes],
        probs=values.copy(),
        fused=confidence * values,
    )
