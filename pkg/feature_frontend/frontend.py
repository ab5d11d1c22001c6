from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from feature_frontend.roi_align import roi_align_boxes
from feature_frontend.structures import (
    ActorBox,
    ActorFeatures,
    FeatureMap,
    TemporalContext
)
from tensor_core import functional as F
from tensor_core.exceptions import DimensionError
from tensor_core.module import Linear, Module
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor, default_dtype


@dataclass(frozen=True)
class FrontendConfig:
    in_channels: int
    reduced_dim: int
    roi_size: Tuple[int, int] = (3, 3)
    sampling_ratio: int = 2


class FeatureFrontend(Module):
    """Actor features and temporal context from a feature map.

    Channel reduction is a position-wise linear map (the 1x1 convolution),
    one for actor crops and one for the context sequence.
    """

    def __init__(self, config: FrontendConfig, rng: Rng):
        self.config = config
        self.actor_reduction = Linear(
            config.in_channels, config.reduced_dim, rng.derive(1)
        )
        self.context_reduction = Linear(
            config.in_channels, config.reduced_dim, rng.derive(2)
        )

    def _check_channels(self, feature_map: FeatureMap) -> None:
        if feature_map.channels != self.config.in_channels:
            raise DimensionError(
                f"frontend expects {self.config.in_channels} channels, "
                f"got {feature_map.channels}"
            )

    def extract_actor_features(
        self, feature_map: FeatureMap, boxes: Sequence[ActorBox]
    ) -> ActorFeatures:
        """RoIAlign, temporal mean, channel reduction, spatial max."""
        self._check_channels(feature_map)
        c = self.config.reduced_dim
        h, w = self.config.roi_size
        if not boxes:
            dtype = default_dtype()
            return ActorFeatures(
                local=Tensor(np.zeros((0, c, h, w), dtype=dtype)),
                roi=Tensor(np.zeros((0, c), dtype=dtype)),
            )
        crops = roi_align_boxes(
            feature_map, boxes, (h, w), self.config.sampling_ratio
        )
        pooled = F.mean_pool(crops, axis=2)
        channels_last = F.transpose(pooled, (0, 2, 3, 1))
        reduced = self.actor_reduction(channels_last)
        local = F.transpose(reduced, (0, 3, 1, 2))
        roi = F.max_pool(F.reshape(local, (len(boxes), c, h * w)), axis=2)
        return ActorFeatures(local=local, roi=roi)

    def preprocess_context(self, feature_map: FeatureMap) -> TemporalContext:
        """Per-frame spatial max, channel reduction, temporal mean."""
        self._check_channels(feature_map)
        return reduce_context(
            spatial_max_context(feature_map), self.context_reduction
        )

    def forward(self, feature_map: FeatureMap, boxes: Sequence[ActorBox]):
        return (
            self.extract_actor_features(feature_map, boxes),
            self.preprocess_context(feature_map),
        )


def spatial_max_context(feature_map: FeatureMap) -> Tensor:
    """C x T sequence of per-frame channel-wise spatial maxima."""
    channels, frames = feature_map.channels, feature_map.frames
    flat = F.reshape(feature_map.values, (channels, frames, -1))
    return F.max_pool(flat, axis=2)


def reduce_context(pooled: Tensor, reduction: Linear) -> TemporalContext:
    local = F.transpose(reduction(F.transpose(pooled, (1, 0))), (1, 0))
    return TemporalContext(local=local, global_=F.mean_pool(local, axis=1))
