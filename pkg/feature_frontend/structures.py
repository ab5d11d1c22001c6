from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from tensor_core.exceptions import DimensionError, GeometryError, ParameterError
from tensor_core.tensor import Tensor, tensor


@dataclass
class FeatureMap:
    """Video feature block laid out as channels x time x height x width."""

    values: Tensor

    def __post_init__(self):
        if not isinstance(self.values, Tensor):
            self.values = tensor(self.values)
        if self.values.ndim != 4:
            raise DimensionError(
                f"feature map must be C x T x H x W, got {self.values.shape}"
            )
        _, frames, height, width = self.values.shape
        if frames < 1 or height < 2 or width < 2:
            raise DimensionError(
                f"feature map needs T >= 1 and H, W >= 2, "
                f"got {self.values.shape}"
            )

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]


@dataclass(frozen=True)
class ActorBox:
    """Keyframe box in normalized [0, 1] coordinates."""

    id: int
    box: Tuple[float, float, float, float]
    confidence: float = 1.0

    def __post_init__(self):
        x1, y1, x2, y2 = self.box
        if not (x1 < x2 and y1 < y2):
            raise GeometryError(f"box {self.box} must satisfy x1<x2, y1<y2")
        if not 0.0 <= self.confidence <= 1.0:
            raise ParameterError(
                f"confidence {self.confidence} outside [0, 1]"
            )

    def clamped(self) -> Tuple[float, float, float, float]:
        return tuple(float(np.clip(v, 0.0, 1.0)) for v in self.box)


@dataclass
class ActorFeatures:
    local: Tensor
    roi: Tensor

    @property
    def count(self) -> int:
        return self.roi.shape[0]


@dataclass
class TemporalContext:
    local: Tensor
    global_: Tensor


@dataclass
class Clip:
    """One keyframe clip: its feature map, boxes and per-box labels."""

    feature_map: FeatureMap
    video_id: str
    clip_time_s: int
    boxes: List[ActorBox]
    labels: List[List[int]] = field(default_factory=list)
    layout: dict = field(default_factory=dict)

    def multi_hot(self, num_classes: int) -> np.ndarray:
        target = np.zeros((len(self.boxes), num_classes))
        for row, labels in enumerate(self.labels):
            target[row, list(labels)] = 1.0
        return target
