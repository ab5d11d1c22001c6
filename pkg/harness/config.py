from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Tuple


@dataclass(frozen=True)
class ModelSettings:
    reduced_dim: int = 32
    attention_dim: int = 32
    roi_size: Tuple[int, int] = (3, 3)
    sampling_ratio: int = 2
    layer_norm_eps: float = 1e-5
    p_drop: float = 0.2


@dataclass(frozen=True)
class CycleSettings:
    depth: int = 2
    mode: str = "cycle"
    use_local: bool = True
    use_global: bool = True


@dataclass(frozen=True)
class HeadSettings:
    depth: int = 2
    use_bank: bool = True
    window_s: int = 60


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 0.05
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 1e-4
    warmup_steps: int = 200
    milestones: Tuple[int, ...] = (1800, 2400)
    gamma: float = 0.1
    lr_multipliers: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    name: str = "run"
    seed: int = 0
    batch_size: int = 4
    max_steps: int = 3000
    eval_every: int = 500
    model: ModelSettings = field(default_factory=ModelSettings)
    cycle: CycleSettings = field(default_factory=CycleSettings)
    head: HeadSettings = field(default_factory=HeadSettings)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["model"]["roi_size"] = list(self.model.roi_size)
        data["optimizer"]["milestones"] = list(self.optimizer.milestones)
        return data

    def variant(self, **sections) -> "RunConfig":
        """Copy with fields of nested sections replaced.

        ``variant(seed=1, cycle={"mode": "c2a"})`` changes the seed and the
        cycle mode only.
        """
        changes = {}
        for key, value in sections.items():
            if isinstance(value, dict):
                changes[key] = replace(getattr(self, key), **value)
            else:
                changes[key] = value
        return replace(self, **changes)


@dataclass(frozen=True)
class DataShape:
    """Dimensions a model takes from its dataset."""

    channels: int
    frames: int
    num_classes: int
    categories: List[str] = field(default_factory=list)
    apply_threshold: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_scene_spec(cls, spec) -> "DataShape":
        return cls(
            channels=spec.channels,
            frames=spec.frames,
            num_classes=spec.num_classes,
            categories=spec.class_categories(),
            apply_threshold=spec.detector_jitter > 0,
        )
