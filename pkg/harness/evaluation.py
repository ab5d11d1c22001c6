import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from interaction_head.bank import MemoryBank
from interaction_head.head import ActionScores, fuse_scores
from synth_data.structures import SceneSample
from tensor_core.rng import Rng

logger = logging.getLogger(__name__)


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> Optional[float]:
    """Mean of the precision at each positive of the score ranking.

    Ties keep their input order. Returns None when there is no positive.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    positives = int(labels.sum())
    if positives == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, positives + 1) / ranks
    return float(precision_at_hits.sum() / positives)


@dataclass
class EvalReport:
    per_class_ap: List[Optional[float]]
    map: float
    excluded: List[int] = field(default_factory=list)
    category_ap: Dict[str, float] = field(default_factory=dict)
    num_actors: int = 0

    def to_dict(self) -> dict:
        return {
            "per_class_ap": self.per_class_ap,
            "map": self.map,
            "excluded": self.excluded,
            "category_ap": self.category_ap,
            "num_actors": self.num_actors,
        }


def mean_average_precision(
    scores: np.ndarray,
    labels: np.ndarray,
    categories: Sequence[str] = (),
) -> EvalReport:
    """Per-class AP over actor rows; classes without positives are excluded."""
    num_classes = labels.shape[1]
    per_class: List[Optional[float]] = [
        average_precision(scores[:, k], labels[:, k]) for k in range(num_classes)
    ]
    excluded = [k for k, ap in enumerate(per_class) if ap is None]
    if excluded:
        logger.warning("classes without positives excluded from mAP: %s", excluded)
    included = [ap for ap in per_class if ap is not None]
    mean = float(np.mean(included)) if included else 0.0
    category_ap: Dict[str, float] = {}
    if categories:
        grouped: Dict[str, List[float]] = {}
        for category, ap in zip(categories, per_class):
            if ap is not None:
                grouped.setdefault(category, []).append(ap)
        category_ap = {name: float(np.mean(aps)) for name, aps in grouped.items()}
    return EvalReport(
        per_class_ap=per_class,
        map=mean,
        excluded=excluded,
        category_ap=category_ap,
        num_actors=int(labels.shape[0]),
    )


def write_bank(model, sample: SceneSample, bank: MemoryBank, rng: Rng) -> None:
    """Store a clip's eval-mode enhanced actors, never the head output."""
    if not sample.boxes:
        return
    bank.update(
        sample.video_id,
        sample.clip_time_s,
        model.enhance(sample.clip, rng).data,
        [box.id for box in sample.boxes],
    )


def fill_bank(model, samples: Sequence[SceneSample], bank: MemoryBank) -> MemoryBank:
    rng = Rng(model.config.seed).derive(20)
    for sample in samples:
        write_bank(model, sample, bank, rng)
    return bank


def predict(
    model,
    samples: Sequence[SceneSample],
    bank: Optional[MemoryBank] = None,
    threshold: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray, List[ActionScores]]:
    """Fused scores and labels of every actor, stacked over clips."""
    if bank is None and model.uses_bank:
        bank = fill_bank(model, samples, model.new_bank())
    rng = Rng(model.config.seed).derive(21)
    num_classes = model.data.num_classes
    score_rows, label_rows, per_clip = [], [], []
    for sample in samples:
        output = model(sample.clip, bank, rng, training=False)
        fused = fuse_scores(output.probs, sample.boxes, threshold)
        per_clip.append(fused)
        score_rows.append(fused.fused.reshape(-1, num_classes))
        label_rows.append(sample.labels.reshape(-1, num_classes))
    if not score_rows:
        empty = np.zeros((0, num_classes))
        return empty, empty, per_clip
    return np.concatenate(score_rows), np.concatenate(label_rows), per_clip


def evaluate(
    model,
    samples: Sequence[SceneSample],
    bank: Optional[MemoryBank] = None,
) -> EvalReport:
    threshold = None
    if model.data.apply_threshold:
        threshold = settings.ACTION_HEAD["BOX_CONFIDENCE_THRESHOLD"]
    was_training = model.training
    model.eval()
    try:
        scores, labels, _ = predict(model, samples, bank, threshold)
    finally:
        if was_training:
            model.train()
    report = mean_average_precision(scores, labels, model.data.categories)
    logger.info(
        "evaluated %d actors: mAP %.4f (%d classes excluded)",
        report.num_actors,
        report.map,
        len(report.excluded),
    )
    return report
