"""Dataset directories: clip files, a JSON manifest of their paths and the spec."""
import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from django.utils.text import slugify

from feature_frontend.clipfile import read_clip, write_clip
from synth_data.serializers import parse_scene_spec
from synth_data.structures import SceneSample, SceneSpec
from tensor_core.exceptions import FormatError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
SPEC_FILE = "spec.json"
CLIP_DIR = "clips"


def clip_stem(sample: SceneSample) -> str:
    return f"{slugify(sample.video_id)}-t{sample.clip_time_s:05d}"


def write_dataset(
    samples: Sequence[SceneSample], spec: SceneSpec, directory: Union[str, Path]
) -> Path:
    directory = Path(directory)
    paths = []
    for sample in samples:
        path = write_clip(directory / CLIP_DIR / clip_stem(sample), sample.clip)
        paths.append(path.relative_to(directory).as_posix())
    with open(directory / MANIFEST_FILE, "w") as stream:
        json.dump(paths, stream, indent=2)
    with open(directory / SPEC_FILE, "w") as stream:
        json.dump(spec.to_dict(), stream, indent=2)
    logger.info("wrote %d clips to %s", len(paths), directory)
    return directory / MANIFEST_FILE


def load_dataset(directory: Union[str, Path]) -> Tuple[SceneSpec, List[SceneSample]]:
    directory = Path(directory)
    try:
        with open(directory / MANIFEST_FILE) as stream:
            paths = json.load(stream)
        with open(directory / SPEC_FILE) as stream:
            spec = parse_scene_spec(json.load(stream))
    except FileNotFoundError as error:
        raise FormatError(f"{directory} is not a dataset directory") from error
    if not isinstance(paths, list):
        raise FormatError(f"{MANIFEST_FILE} must be a JSON list of clip paths")
    samples = [
        SceneSample.from_clip(read_clip(directory / path), spec.num_classes)
        for path in paths
    ]
    logger.info("loaded %d clips from %s", len(samples), directory)
    return spec, samples
