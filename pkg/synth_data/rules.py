"""Rule application over scene layouts, and the oracles built on it."""
import logging
from typing import Dict, List, Sequence

import numpy as np

from synth_data.structures import Rule, SceneSample, SceneSpec

logger = logging.getLogger(__name__)


def token_visible(tokens: Sequence[dict], token: int, phase) -> bool:
    """A token painted on every frame is visible in every phase."""
    return any(
        item["token"] == token
        and (phase is None or item["phase"] is None or item["phase"] == phase)
        for item in tokens
    )


def rule_fires(rule: Rule, actor: dict, layout: dict) -> bool:
    if rule.actor_pattern is not None and actor["pattern"] != rule.actor_pattern:
        return False
    if rule.category == "object":
        return token_visible(layout["tokens"], rule.context_token, rule.phase)
    if rule.category == "carry":
        item = actor.get("item")
        return item in rule.held_items and token_visible(
            layout["tokens"], item, rule.phase
        )
    if rule.category == "person":
        return any(
            other["pattern"] == rule.partner_pattern
            for other in layout["actors"]
            if other["id"] != actor["id"]
        )
    if rule.category == "memory":
        return rule.memory_token in layout.get("video_memory", [])
    return True


def apply_rules(
    layout: dict, spec: SceneSpec, inside_box_only: bool = False
) -> List[List[int]]:
    rules = [
        rule for rule in spec.rule_table
        if rule.inside_box_only or not inside_box_only
    ]
    return [
        sorted({rule.label for rule in rules if rule_fires(rule, actor, layout)})
        for actor in layout["actors"]
    ]


def actor_only_labels(layout: dict, spec: SceneSpec) -> List[List[int]]:
    """Labels derivable from each actor's own box content."""
    return apply_rules(layout, spec, inside_box_only=True)


def label_matrix(labels: Sequence[Sequence[int]], num_classes: int) -> np.ndarray:
    matrix = np.zeros((len(labels), num_classes))
    for row, row_labels in enumerate(labels):
        matrix[row, list(row_labels)] = 1.0
    return matrix


def context_necessity(samples: Sequence[SceneSample], spec: SceneSpec) -> Dict:
    """Label accuracy of the actor-only oracle against the full-rule oracle."""
    entries = actor_only_hits = full_hits = 0
    for sample in samples:
        if not sample.boxes:
            continue
        stored = sample.labels
        actor_only = label_matrix(
            actor_only_labels(sample.layout, spec), spec.num_classes
        )
        full = label_matrix(apply_rules(sample.layout, spec), spec.num_classes)
        entries += stored.size
        actor_only_hits += int((actor_only == stored).sum())
        full_hits += int((full == stored).sum())
    if entries == 0:
        return {"entries": 0, "actor_only_accuracy": 1.0, "full_rule_accuracy": 1.0}
    report = {
        "entries": entries,
        "actor_only_accuracy": actor_only_hits / entries,
        "full_rule_accuracy": full_hits / entries,
    }
    logger.info(
        "context necessity over %d label entries: actor-only %.4f, full %.4f",
        entries,
        report["actor_only_accuracy"],
        report["full_rule_accuracy"],
    )
    return report
