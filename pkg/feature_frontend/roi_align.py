"""3D RoIAlign over a C x T x H x W feature map.

Bilinear sampling on a regular grid is separable, so each box becomes a row
sampling matrix (h x H) and a column sampling matrix (w x W); the crop of
every frame is ``rows @ frame @ cols.T``. Boxes are duplicated over time.
"""
import math
from typing import List, Sequence, Tuple

import numpy as np

from feature_frontend.structures import ActorBox, FeatureMap
from tensor_core import functional as F
from tensor_core.exceptions import GeometryError, ParameterError
from tensor_core.tensor import Tensor


def axis_sampling_matrix(
    start: float,
    length: float,
    bins: int,
    size: int,
    sampling_ratio: int,
) -> np.ndarray:
    """Averaged bilinear weights for ``bins`` cells along one axis.

    ``start`` and ``length`` are in pixel-index coordinates (pixel centres
    at integers). ``sampling_ratio`` samples per cell, 0 meaning
    ``ceil(length / bins)``.
    """
    bin_size = length / bins
    ratio = sampling_ratio or max(1, math.ceil(bin_size))
    weights = np.zeros((bins, size))
    for cell in range(bins):
        for sample in range(ratio):
            coord = start + cell * bin_size + (sample + 0.5) * bin_size / ratio
            if coord < -1.0 or coord > size:
                continue
            coord = max(coord, 0.0)
            low = int(math.floor(coord))
            if low >= size - 1:
                low = high = size - 1
                coord = float(low)
            else:
                high = low + 1
            frac = coord - low
            weights[cell, low] += (1.0 - frac) / ratio
            weights[cell, high] += frac / ratio
    return weights


def box_sampling_matrices(
    box: ActorBox,
    height: int,
    width: int,
    out_hw: Tuple[int, int],
    sampling_ratio: int,
) -> Tuple[np.ndarray, np.ndarray]:
    out_h, out_w = out_hw
    if out_h < 1 or out_w < 1:
        raise ParameterError(f"RoIAlign output size must be >= 1, got {out_hw}")
    if sampling_ratio < 0:
        raise ParameterError(f"sampling ratio must be >= 0, got {sampling_ratio}")
    x1, y1, x2, y2 = box.clamped()
    if x2 <= x1 or y2 <= y1:
        raise GeometryError(
            f"box {box.box} of actor {box.id} has zero area inside the map"
        )
    rows = axis_sampling_matrix(
        y1 * height - 0.5, (y2 - y1) * height, out_h, height, sampling_ratio
    )
    cols = axis_sampling_matrix(
        x1 * width - 0.5, (x2 - x1) * width, out_w, width, sampling_ratio
    )
    return rows, cols


def roi_align_boxes(
    feature_map: FeatureMap,
    boxes: Sequence[ActorBox],
    out_hw: Tuple[int, int],
    sampling_ratio: int = 2,
) -> Tensor:
    """Crop every box from every frame: N x C x T x h x w."""
    dtype = feature_map.values.dtype
    matrices: List[Tuple[np.ndarray, np.ndarray]] = [
        box_sampling_matrices(
            box, feature_map.height, feature_map.width, out_hw, sampling_ratio
        )
        for box in boxes
    ]
    rows = np.stack([r for r, _ in matrices]).astype(dtype)
    cols_t = np.stack([np.swapaxes(c, 0, 1) for _, c in matrices]).astype(dtype)
    count = len(boxes)
    # N x 1 x 1 x h x H  @  1 x C x T x H x W  @  N x 1 x 1 x W x w
    rows_t = Tensor(rows.reshape(count, 1, 1, *rows.shape[1:]))
    cols_tt = Tensor(cols_t.reshape(count, 1, 1, *cols_t.shape[1:]))
    values = F.reshape(feature_map.values, (1, *feature_map.values.shape))
    return F.matmul(F.matmul(rows_t, values), cols_tt)


def roi_align_3d(
    feature_map: FeatureMap,
    box: ActorBox,
    out_hw: Tuple[int, int],
    sampling_ratio: int = 2,
) -> Tensor:
    """Crop one box from every frame: C x T x h x w."""
    cropped = roi_align_boxes(feature_map, [box], out_hw, sampling_ratio)
    return F.reshape(cropped, cropped.shape[1:])
