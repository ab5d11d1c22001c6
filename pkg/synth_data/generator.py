"""Synthetic scenes whose labels depend on content outside the actor boxes.

Every actor pattern, context token, memory token and held item is a unit
vector of an orthonormal channel basis. Actors fill their box on every
frame and may hold one item, painted on a single cell of the box. Context
tokens occupy one cell at least one cell away from every box,
either on all frames or on the frames of one temporal phase. A memory
token is painted in a single clip of a video and labels every clip of it.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from feature_frontend.encoder import ToyEncoder
from feature_frontend.structures import ActorBox, Clip, FeatureMap
from synth_data.rules import apply_rules, label_matrix
from synth_data.structures import SceneSample, SceneSpec
from tensor_core.exceptions import GenerationError, ParameterError
from tensor_core.rng import Rng
from tensor_core.tensor import default_dtype, tensor

logger = logging.getLogger(__name__)

BOX_MIN = 2
BOX_GAP = 1
PLACEMENT_ATTEMPTS = 200
SCENE_ATTEMPTS = 20
DECODE_THRESHOLD = 0.5


def _split_symbols(spec: SceneSpec, rows: np.ndarray) -> Dict[str, np.ndarray]:
    stops = np.cumsum(
        [spec.n_patterns, spec.n_context_tokens, spec.n_memory_tokens, spec.n_items]
    )
    return {
        "patterns": rows[:stops[0]],
        "tokens": rows[stops[0]:stops[1]],
        "memory": rows[stops[1]:stops[2]],
        "items": rows[stops[2]:stops[3]],
    }


def symbol_embeddings(spec: SceneSpec) -> Dict[str, np.ndarray]:
    """Orthonormal rows for patterns, tokens, memory tokens and items."""
    basis, _ = np.linalg.qr(
        Rng(spec.seed).derive(0).normal(0.0, 1.0, (spec.channels, spec.channels))
    )
    return _split_symbols(spec, basis.T)


def symbol_colors(spec: SceneSpec) -> Dict[str, np.ndarray]:
    symbols = (
        spec.n_patterns + spec.n_context_tokens + spec.n_memory_tokens + spec.n_items
    )
    colors = Rng(spec.seed).derive(1).uniform(0.2, 1.0, (symbols, 3))
    return _split_symbols(spec, colors)


def _box_limit(spec: SceneSpec) -> int:
    return max(BOX_MIN, min(spec.height, spec.width) // 3)


def _inflated(cells, margin: int) -> Tuple[int, int, int, int]:
    y0, x0, y1, x1 = cells
    return y0 - margin, x0 - margin, y1 + margin, x1 + margin


def _overlaps(first, second) -> bool:
    return not (
        first[2] <= second[0]
        or second[2] <= first[0]
        or first[3] <= second[1]
        or second[3] <= first[1]
    )


def place_boxes(spec: SceneSpec, count: int, rng: Rng) -> List[List[int]]:
    """Non-touching [y0, x0, y1, x1) cell rectangles."""
    if count and count * (BOX_MIN + BOX_GAP) ** 2 > spec.height * spec.width:
        raise GenerationError(
            f"{count} boxes cannot fit on a {spec.height}x{spec.width} grid"
        )
    limit = _box_limit(spec)
    for _ in range(SCENE_ATTEMPTS):
        boxes: List[List[int]] = []
        for _ in range(count):
            for _ in range(PLACEMENT_ATTEMPTS):
                height = int(rng.integers(BOX_MIN, min(limit, spec.height) + 1))
                width = int(rng.integers(BOX_MIN, min(limit, spec.width) + 1))
                y0 = int(rng.integers(0, spec.height - height + 1))
                x0 = int(rng.integers(0, spec.width - width + 1))
                cells = [y0, x0, y0 + height, x0 + width]
                if not any(
                    _overlaps(_inflated(cells, BOX_GAP), other) for other in boxes
                ):
                    boxes.append(cells)
                    break
            else:
                break
        if len(boxes) == count:
            return boxes
    raise GenerationError(
        f"could not pack {count} boxes on a {spec.height}x{spec.width} grid"
    )


def free_cells(spec: SceneSpec, boxes: Sequence[Sequence[int]]) -> List[Tuple[int, int]]:
    """Cells at least one cell away from every box."""
    blocked = np.zeros((spec.height, spec.width), dtype=bool)
    for cells in boxes:
        y0, x0, y1, x1 = _inflated(cells, BOX_GAP)
        blocked[max(y0, 0):y1, max(x0, 0):x1] = True
    return [tuple(int(v) for v in cell) for cell in np.argwhere(~blocked)]


def _video_plan(spec: SceneSpec, video_index: int, clips: int) -> Dict[int, int]:
    """Memory token -> index of the one clip showing it."""
    rng = Rng(spec.seed).derive(2, video_index)
    plan = {}
    for token in range(spec.n_memory_tokens):
        if rng.random(()) < spec.memory_probability:
            plan[token] = int(rng.integers(0, clips))
    return plan


def scene_layout(
    spec: SceneSpec,
    rng: Rng,
    memory_here: Sequence[int] = (),
    video_memory: Sequence[int] = (),
) -> dict:
    count = int(rng.integers(spec.min_actors, spec.n_actors + 1))
    boxes = place_boxes(spec, count, rng)
    actors = [
        {"id": index, "pattern": int(rng.integers(0, spec.n_patterns)), "cells": cells}
        for index, cells in enumerate(boxes)
    ]
    # drawing n_items means empty-handed
    for actor in actors:
        item = int(rng.integers(0, spec.n_items + 1))
        actor["item"] = item if item < spec.n_items else None
        if actor["item"] is not None:
            y0, x0, y1, x1 = actor["cells"]
            actor["item_cell"] = [
                int(rng.integers(y0, y1)),
                int(rng.integers(x0, x1)),
            ]
    # each token is absent, on every frame, or on one phase
    tokens = []
    for token in range(spec.n_context_tokens):
        choice = int(rng.integers(0, spec.n_phases + 2))
        if choice == 0:
            continue
        tokens.append({"token": token, "phase": None if choice == 1 else choice - 2})
    cells = free_cells(spec, boxes)
    needed = len(tokens) + len(memory_here)
    if needed > len(cells):
        raise GenerationError(
            f"{needed} tokens but only {len(cells)} free cells outside the boxes"
        )
    picks = rng.choice(len(cells), needed, replace=False)
    for item, pick in zip(tokens, picks[:len(tokens)]):
        item["cell"] = list(cells[pick])
    memory = [
        {"token": int(token), "cell": list(cells[pick])}
        for token, pick in zip(memory_here, picks[len(tokens):])
    ]
    return {
        "grid": list(spec.grid),
        "actors": actors,
        "tokens": tokens,
        "memory": memory,
        "video_memory": sorted(int(token) for token in video_memory),
    }


def paint_embeddings(spec: SceneSpec, layout: dict, rng: Rng) -> np.ndarray:
    """C x T x H x W feature block: noise plus symbol embeddings."""
    embeddings = symbol_embeddings(spec)
    values = rng.normal(
        0.0, spec.noise_std, (spec.channels, spec.frames, spec.height, spec.width)
    )
    _paint(values, spec, layout, embeddings)
    return values


def render_video(spec: SceneSpec, layout: dict, rng: Rng) -> np.ndarray:
    """3 x T x H x W colour video of the same layout, for the toy encoder."""
    video = rng.uniform(0.0, spec.noise_std, (3, spec.frames, spec.height, spec.width))
    _paint(video, spec, layout, symbol_colors(spec))
    return video


def _paint(values: np.ndarray, spec: SceneSpec, layout: dict, table) -> None:
    for actor in layout["actors"]:
        y0, x0, y1, x1 = actor["cells"]
        values[:, :, y0:y1, x0:x1] += table["patterns"][actor["pattern"]][
            :, None, None, None
        ]
        if actor.get("item") is not None:
            y, x = actor["item_cell"]
            values[:, :, y, x] += table["items"][actor["item"]][:, None]
    for item in layout["tokens"]:
        y, x = item["cell"]
        frames = spec.phase_frames(item["phase"])
        values[:, frames, y, x] += table["tokens"][item["token"]][:, None]
    for item in layout["memory"]:
        y, x = item["cell"]
        values[:, :, y, x] += table["memory"][item["token"]][:, None]


def detector_boxes(spec: SceneSpec, layout: dict, rng: Rng) -> List[ActorBox]:
    """Normalized boxes; with jitter, perturbed edges and confidences in [0.5, 1]."""
    boxes = []
    for actor in layout["actors"]:
        y0, x0, y1, x1 = actor["cells"]
        box = np.array(
            [x0 / spec.width, y0 / spec.height, x1 / spec.width, y1 / spec.height]
        )
        confidence = 1.0
        if spec.detector_jitter > 0:
            size = np.array([box[2] - box[0], box[3] - box[1]] * 2)
            box = box + rng.uniform(
                -spec.detector_jitter, spec.detector_jitter, 4
            ) * size
            box = np.clip(box, 0.0, 1.0)
            centre_x, centre_y = (x0 + x1) / 2 / spec.width, (y0 + y1) / 2 / spec.height
            box[0], box[2] = min(box[0], centre_x), max(box[2], centre_x + 1e-3)
            box[1], box[3] = min(box[1], centre_y), max(box[3], centre_y + 1e-3)
            box = np.clip(box, 0.0, 1.0)
            confidence = float(rng.uniform(0.5, 1.0, ()))
        boxes.append(
            ActorBox(
                id=actor["id"],
                box=tuple(float(v) for v in box),
                confidence=confidence,
            )
        )
    return boxes


def make_sample(
    spec: SceneSpec,
    video_index: int,
    clip_index: int,
    plan: Dict[int, int],
    encoder: Optional[ToyEncoder] = None,
) -> SceneSample:
    rng = Rng(spec.seed).derive(3, video_index, clip_index)
    memory_here = sorted(token for token, clip in plan.items() if clip == clip_index)
    layout = scene_layout(spec, rng, memory_here, sorted(plan))
    if spec.feature_source == "encoder":
        feature_map = encoder.encode(render_video(spec, layout, rng))
    else:
        feature_map = FeatureMap(
            tensor(paint_embeddings(spec, layout, rng), dtype=default_dtype())
        )
    labels = apply_rules(layout, spec)
    clip = Clip(
        feature_map=feature_map,
        video_id=f"video-{video_index:05d}",
        clip_time_s=clip_index + 1,
        boxes=detector_boxes(spec, layout, rng),
        labels=labels,
        layout=layout,
    )
    return SceneSample(clip=clip, labels=label_matrix(labels, spec.num_classes))


def generate(spec: SceneSpec, count: int, workers: int = 1) -> List[SceneSample]:
    """``count`` clips; consecutive clips of a video are one second apart."""
    if count < 0:
        raise ParameterError(f"sample count must be >= 0, got {count}")
    encoder = (
        ToyEncoder(spec.channels, seed=spec.seed)
        if spec.feature_source == "encoder"
        else None
    )
    per_video = spec.clips_per_video
    videos = math.ceil(count / per_video)
    jobs = []
    for video_index in range(videos):
        clips = min(per_video, count - video_index * per_video)
        plan = _video_plan(spec, video_index, clips)
        jobs.extend(
            (video_index, clip_index, plan) for clip_index in range(clips)
        )

    def build(job):
        return make_sample(spec, *job, encoder=encoder)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(build, jobs))
    else:
        samples = [build(job) for job in jobs]
    logger.info(
        "generated %d clips in %d videos (seed %d)", len(samples), videos, spec.seed
    )
    return samples


def split(
    samples: Sequence[SceneSample],
    fractions: Tuple[float, float],
    seed: int = 0,
) -> Tuple[List[SceneSample], List[SceneSample]]:
    """Seeded split by whole videos into train and validation parts."""
    if len(fractions) != 2 or any(f < 0 for f in fractions):
        raise ParameterError(f"need two non-negative fractions, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ParameterError(f"fractions must sum to 1, got {sum(fractions)}")
    videos = list(dict.fromkeys(sample.video_id for sample in samples))
    order = Rng(seed).permutation(len(videos))
    cut = int(round(fractions[0] * len(videos)))
    train_videos = {videos[index] for index in order[:cut]}
    train = [s for s in samples if s.video_id in train_videos]
    val = [s for s in samples if s.video_id not in train_videos]
    return train, val


def _decode_cell(vector: np.ndarray, table: np.ndarray) -> Optional[int]:
    if not len(table):
        return None
    scores = table @ vector
    best = int(np.argmax(scores))
    return best if scores[best] > DECODE_THRESHOLD else None


def decode_layout(feature_map: FeatureMap, layout: dict, spec: SceneSpec) -> dict:
    """Re-read patterns and tokens from painted values.

    Box geometry is taken from ``layout``; every symbol is decoded from
    the feature map. ``video_memory`` holds only memory tokens seen here.
    """
    embeddings = symbol_embeddings(spec)
    values = feature_map.values.data
    actors = []
    for actor in layout["actors"]:
        y0, x0, y1, x1 = actor["cells"]
        mean = values[:, :, y0:y1, x0:x1].mean(axis=(1, 2, 3))
        decoded = {
            "id": actor["id"],
            "pattern": _decode_cell(mean, embeddings["patterns"]),
            "cells": list(actor["cells"]),
            "item": None,
        }
        for y in range(y0, y1):
            for x in range(x0, x1):
                item = _decode_cell(
                    values[:, :, y, x].mean(axis=1), embeddings["items"]
                )
                if item is not None:
                    decoded.update(item=item, item_cell=[y, x])
        actors.append(decoded)
    seen: Dict[int, List[int]] = {}
    memory = []
    for y, x in free_cells(spec, [actor["cells"] for actor in layout["actors"]]):
        token = _decode_cell(values[:, :, y, x].mean(axis=1), embeddings["memory"])
        if token is not None:
            memory.append({"token": token, "cell": [y, x]})
            continue
        for frame in range(spec.frames):
            token = _decode_cell(values[:, frame, y, x], embeddings["tokens"])
            if token is not None:
                seen.setdefault(token, []).append(frame)
    tokens = []
    phases = {None: spec.phase_frames(None)}
    phases.update({p: spec.phase_frames(p) for p in range(spec.n_phases)})
    for token, frames in sorted(seen.items()):
        phase = next(
            (key for key, expected in phases.items() if sorted(frames) == expected),
            "unknown",
        )
        if phase == "unknown":
            logger.warning("token %d seen on frames %s, no phase matches", token, frames)
            continue
        tokens.append({"token": token, "phase": phase})
    return {
        "grid": list(spec.grid),
        "actors": actors,
        "tokens": tokens,
        "memory": memory,
        "video_memory": sorted({item["token"] for item in memory}),
    }


def audit_rules(samples: Sequence[SceneSample], spec: SceneSpec) -> float:
    """Fraction of samples whose decoded layout reproduces the stored labels."""
    if not samples:
        return 1.0
    decoded = [
        decode_layout(sample.feature_map, sample.layout, spec) for sample in samples
    ]
    video_memory: Dict[str, set] = {}
    for sample, layout in zip(samples, decoded):
        video_memory.setdefault(sample.video_id, set()).update(layout["video_memory"])
    matches = 0
    for sample, layout in zip(samples, decoded):
        layout["video_memory"] = sorted(video_memory[sample.video_id])
        derived = label_matrix(apply_rules(layout, spec), spec.num_classes)
        matches += int(np.array_equal(derived, sample.labels))
    return matches / len(samples)
