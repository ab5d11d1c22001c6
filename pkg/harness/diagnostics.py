"""Actor/context similarity across layers and attention weight export."""
import csv
import itertools
import logging
from dataclasses import dataclass
from typing import IO, List, Optional, Sequence

import numpy as np

from cycleacr.structures import TRACE_HEADER
from harness.detector import ActionDetector
from interaction_head.bank import MemoryBank
from synth_data.structures import SceneSample
from tensor_core.exceptions import DiagnosticError
from tensor_core.rng import Rng

logger = logging.getLogger(__name__)

SIMILARITY_HEADER = ("branch", "stage", "actor_a", "actor_b", "cosine")


@dataclass(frozen=True)
class SimilarityRow:
    branch: str
    stage: str
    actor_a: int
    actor_b: int
    cosine: float


def cosine_similarity(first: np.ndarray, second: np.ndarray) -> float:
    norm = np.linalg.norm(first) * np.linalg.norm(second)
    if norm == 0.0:
        return float("nan")
    return float(first @ second / norm)


def stage_name(index: int) -> str:
    return "before_M0" if index == 0 else f"after_M{index}"


def _pairwise(branch: str, stages: Sequence[np.ndarray], actor_ids) -> List[SimilarityRow]:
    rows = []
    for index, stage in enumerate(stages):
        for a, b in itertools.combinations(range(len(actor_ids)), 2):
            rows.append(
                SimilarityRow(
                    branch=branch,
                    stage=stage_name(index),
                    actor_a=actor_ids[a],
                    actor_b=actor_ids[b],
                    cosine=cosine_similarity(stage[a], stage[b]),
                )
            )
    return rows


def similarity_diagnostic(
    model: ActionDetector, sample: SceneSample
) -> List[SimilarityRow]:
    """Pairwise cosine similarity of actor features and per-actor contexts.

    ``actor`` rows follow the enhancement layers of the local branch,
    ``context`` rows the reorganization layers of the global branch.
    """
    if len(sample.boxes) < 2:
        raise DiagnosticError(
            f"similarity needs at least 2 actors, scene has {len(sample.boxes)}"
        )
    output = model(sample.clip, None, Rng(model.config.seed).derive(30), training=False)
    actor_ids = [box.id for box in sample.boxes]
    rows = []
    if len(output.cycle.actor_stages) > 1:
        rows += _pairwise("actor", output.cycle.actor_stages, actor_ids)
    if output.cycle.context_stages:
        rows += _pairwise("context", output.cycle.context_stages, actor_ids)
    if not rows:
        raise DiagnosticError("model has no enhancement or reorganization stages")
    return rows


def stage_means(rows: Sequence[SimilarityRow]) -> dict:
    """Mean pairwise similarity keyed by (branch, stage)."""
    grouped = {}
    for row in rows:
        grouped.setdefault((row.branch, row.stage), []).append(row.cosine)
    return {key: float(np.mean(values)) for key, values in grouped.items()}


def write_similarity_csv(stream: IO[str], rows: Sequence[SimilarityRow]) -> None:
    writer = csv.writer(stream)
    writer.writerow(SIMILARITY_HEADER)
    for row in rows:
        writer.writerow(
            (row.branch, row.stage, row.actor_a, row.actor_b, repr(row.cosine))
        )


def dump_attention(
    model: ActionDetector,
    sample: SceneSample,
    stream: IO[str],
    bank: Optional[MemoryBank] = None,
) -> int:
    """Write every attention weight of one eval forward; returns the row count."""
    output = model(
        sample.clip,
        bank if model.uses_bank else None,
        Rng(model.config.seed).derive(31),
        training=False,
    )
    count = output.traces.write_csv(stream, [box.id for box in sample.boxes])
    logger.info("exported %d attention weights (%s)", count, ",".join(TRACE_HEADER))
    return count
