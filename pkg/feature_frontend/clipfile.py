"""Clip files: a CTEN feature map next to a JSON sidecar of the same stem."""
import json
import logging
from pathlib import Path
from typing import Union

from feature_frontend.serializers import ClipSidecarSerializer
from feature_frontend.structures import ActorBox, Clip, FeatureMap
from tensor_core.serialization import load_array, save_array
from tensor_core.tensor import default_dtype, tensor

logger = logging.getLogger(__name__)

MAP_SUFFIX = ".cten"
SIDECAR_SUFFIX = ".json"


def clip_sidecar(clip: Clip) -> dict:
    labels = clip.labels or [[] for _ in clip.boxes]
    return {
        "video_id": clip.video_id,
        "clip_time_s": clip.clip_time_s,
        "boxes": [
            {
                "id": box.id,
                "x1": box.box[0],
                "y1": box.box[1],
                "x2": box.box[2],
                "y2": box.box[3],
                "confidence": box.confidence,
                "labels": sorted(int(k) for k in box_labels),
            }
            for box, box_labels in zip(clip.boxes, labels)
        ],
        "layout": clip.layout,
    }


def write_clip(stem: Union[str, Path], clip: Clip) -> Path:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    save_array(stem.with_suffix(MAP_SUFFIX), clip.feature_map.values.data)
    with open(stem.with_suffix(SIDECAR_SUFFIX), "w") as stream:
        json.dump(clip_sidecar(clip), stream, indent=2)
    return stem.with_suffix(MAP_SUFFIX)


def read_clip(path: Union[str, Path]) -> Clip:
    """Load a clip from either of its two files."""
    stem = Path(path).with_suffix("")
    with open(stem.with_suffix(SIDECAR_SUFFIX)) as stream:
        serializer = ClipSidecarSerializer(data=json.load(stream))
    serializer.is_valid(raise_exception=True)
    sidecar = serializer.validated_data
    values = load_array(stem.with_suffix(MAP_SUFFIX))
    boxes = [
        ActorBox(
            id=box["id"],
            box=(box["x1"], box["y1"], box["x2"], box["y2"]),
            confidence=box["confidence"],
        )
        for box in sidecar["boxes"]
    ]
    logger.debug("loaded clip %s with %d boxes", stem, len(boxes))
    return Clip(
        feature_map=FeatureMap(tensor(values, dtype=default_dtype())),
        video_id=sidecar["video_id"],
        clip_time_s=sidecar["clip_time_s"],
        boxes=boxes,
        labels=[list(box["labels"]) for box in sidecar["boxes"]],
        layout=sidecar["layout"],
    )
