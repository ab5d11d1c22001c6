from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from feature_frontend.structures import ActorBox, Clip, FeatureMap

CATEGORIES = ("pose", "object", "carry", "person", "memory")
FEATURE_SOURCES = ("embedding", "encoder")


@dataclass(frozen=True)
class Rule:
    """One label rule; unset conditions match anything.

    pose: the actor shows ``actor_pattern``.
    object: ``context_token`` is visible outside the boxes, during ``phase``
    when set.
    carry: the actor holds an item k from ``held_items`` and context token
    k is visible outside the boxes, during ``phase`` when set.
    person: another actor in the clip shows ``partner_pattern``.
    memory: ``memory_token`` is visible in some clip of the same video.
    """

    label: int
    category: str
    actor_pattern: Optional[int] = None
    context_token: Optional[int] = None
    phase: Optional[int] = None
    partner_pattern: Optional[int] = None
    memory_token: Optional[int] = None
    held_items: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.held_items is not None:
            object.__setattr__(
                self, "held_items", tuple(int(item) for item in self.held_items)
            )

    @property
    def inside_box_only(self) -> bool:
        return self.category == "pose"

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.held_items is not None:
            data["held_items"] = list(self.held_items)
        return data


def default_rules(n_memory_tokens: int = 0, n_items: int = 4) -> Tuple[Rule, ...]:
    rules = [
        Rule(0, "pose", actor_pattern=0),
        Rule(1, "pose", actor_pattern=1),
        Rule(2, "object", actor_pattern=0, context_token=0, phase=0),
        Rule(3, "object", actor_pattern=1, context_token=1, phase=1),
        Rule(6, "person", actor_pattern=2, partner_pattern=0),
    ]
    # without items the carry labels fall back to plain object rules
    fallbacks = {
        4: Rule(4, "object", actor_pattern=2, context_token=2),
        5: Rule(5, "object", context_token=3, phase=0),
    }
    for label, items in ((4, (0, 1)), (5, (2, 3))):
        held = tuple(item for item in items if item < n_items)
        rules.insert(
            label,
            Rule(label, "carry", held_items=held) if held else fallbacks[label],
        )
    if n_memory_tokens:
        rules.append(Rule(7, "memory", memory_token=0))
    else:
        rules.append(Rule(7, "pose", actor_pattern=2))
    return tuple(rules)


@dataclass(frozen=True)
class SceneSpec:
    grid: Tuple[int, int, int] = (16, 16, 8)
    n_actors: int = 3
    min_actors: int = 1
    n_patterns: int = 3
    n_context_tokens: int = 4
    n_phases: int = 2
    n_memory_tokens: int = 0
    n_items: int = 4
    num_classes: int = 8
    channels: int = 16
    rule_table: Tuple[Rule, ...] = field(default_factory=default_rules)
    seed: int = 0
    noise_std: float = 0.05
    detector_jitter: float = 0.0
    clips_per_video: int = 1
    memory_probability: float = 0.5
    feature_source: str = "embedding"

    @property
    def height(self) -> int:
        return self.grid[0]

    @property
    def width(self) -> int:
        return self.grid[1]

    @property
    def frames(self) -> int:
        return self.grid[2]

    def phase_frames(self, phase: Optional[int]) -> List[int]:
        if phase is None:
            return list(range(self.frames))
        start = phase * self.frames // self.n_phases
        stop = (phase + 1) * self.frames // self.n_phases
        return list(range(start, stop))

    def class_categories(self) -> List[str]:
        """Category of the first rule producing each class."""
        categories = ["unused"] * self.num_classes
        for rule in reversed(self.rule_table):
            categories[rule.label] = rule.category
        return categories

    def to_dict(self) -> dict:
        data = asdict(self)
        data["grid"] = list(self.grid)
        data["rule_table"] = [rule.to_dict() for rule in self.rule_table]
        return data


@dataclass
class SceneSample:
    clip: Clip
    labels: np.ndarray

    @classmethod
    def from_clip(cls, clip: Clip, num_classes: int) -> "SceneSample":
        return cls(clip=clip, labels=clip.multi_hot(num_classes))

    @property
    def feature_map(self) -> FeatureMap:
        return self.clip.feature_map

    @property
    def boxes(self) -> List[ActorBox]:
        return self.clip.boxes

    @property
    def layout(self) -> dict:
        return self.clip.layout

    @property
    def video_id(self) -> str:
        return self.clip.video_id

    @property
    def clip_time_s(self) -> int:
        return self.clip.clip_time_s

    @property
    def key(self) -> Tuple[str, int]:
        return self.clip.video_id, self.clip.clip_time_s
