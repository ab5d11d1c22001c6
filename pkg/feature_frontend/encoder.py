import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from feature_frontend.structures import FeatureMap
from tensor_core.exceptions import DimensionError
from tensor_core.rng import Rng
from tensor_core.tensor import default_dtype, tensor

VIDEO_CHANNELS = 3


def conv3x3_relu(frames: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Same-padded per-frame 3x3 convolution, ReLU. frames: Cin x T x H x W."""
    padded = np.pad(frames, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(padded, (3, 3), axis=(2, 3))
    return np.maximum(np.einsum("cthwij,ocij->othw", windows, weights), 0.0)


class ToyEncoder:
    """Frozen two-layer convolutional stand-in for a video backbone."""

    def __init__(self, out_channels: int, hidden_channels: int = 8, seed: int = 0):
        rng = Rng(seed)
        self.out_channels = out_channels
        self.first = rng.normal(
            0.0, np.sqrt(2.0 / (VIDEO_CHANNELS * 9)),
            (hidden_channels, VIDEO_CHANNELS, 3, 3),
        )
        self.second = rng.normal(
            0.0, np.sqrt(2.0 / (hidden_channels * 9)),
            (out_channels, hidden_channels, 3, 3),
        )

    def encode(self, video: np.ndarray) -> FeatureMap:
        if video.ndim != 4 or video.shape[0] != VIDEO_CHANNELS:
            raise DimensionError(
                f"video must be 3 x T x H x W, got {video.shape}"
            )
        hidden = conv3x3_relu(video, self.first)
        features = conv3x3_relu(hidden, self.second)
        return FeatureMap(tensor(features.astype(default_dtype())))
