import csv
from dataclasses import dataclass, field
from typing import IO, Iterator, List, Sequence, Tuple

import numpy as np

from tensor_core.exceptions import ConfigError
from tensor_core.tensor import Tensor

MODES = ("cycle", "c2a", "a2c")
TRACE_HEADER = ("layer", "branch", "actor_id", "query_index", "key_index", "weight")


@dataclass(frozen=True)
class CycleConfig:
    depth: int = 2
    channels: int = 32
    attention_dim: int = 32
    frames: int = 8
    p_drop: float = 0.2
    use_local_branch: bool = True
    use_global_branch: bool = True
    mode: str = "cycle"
    layer_norm_eps: float = 1e-5

    def __post_init__(self):
        if not (self.use_local_branch or self.use_global_branch):
            raise ConfigError("at least one of the local/global branches is required")
        if self.depth < 1:
            raise ConfigError(f"depth must be positive, got {self.depth}")
        if self.attention_dim < 2:
            raise ConfigError(
                "attention dim must be >= 2 for the layer norm, "
                f"got {self.attention_dim}"
            )
        if self.channels < 1 or self.frames < 1:
            raise ConfigError("channels and frames must be positive")
        if not 0.0 <= self.p_drop < 1.0:
            raise ConfigError(f"dropout rate {self.p_drop} outside [0, 1)")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def branch_count(self) -> int:
        return int(self.use_local_branch) + int(self.use_global_branch)


@dataclass
class ReorganizedContext:
    local: Tensor
    global_: Tensor


@dataclass
class TraceRecord:
    branch: str
    layer: int
    weights: np.ndarray


@dataclass
class AttentionTraces:
    """Every softmax weight tensor of one forward, shaped N x queries x keys."""

    records: List[TraceRecord] = field(default_factory=list)

    def add(self, branch: str, layer: int, weights: Tensor) -> None:
        self.records.append(TraceRecord(branch, layer, weights.data.copy()))

    def extend(self, other: "AttentionTraces") -> None:
        self.records.extend(other.records)

    def branch(self, name: str) -> List[TraceRecord]:
        return [record for record in self.records if record.branch == name]

    def rows(self, actor_ids: Sequence[int]) -> Iterator[Tuple]:
        for record in self.records:
            weights = record.weights
            for actor_index, actor_id in enumerate(actor_ids):
                for query_index in range(weights.shape[1]):
                    for key_index in range(weights.shape[2]):
                        yield (
                            record.layer,
                            record.branch,
                            int(actor_id),
                            query_index,
                            key_index,
                            float(weights[actor_index, query_index, key_index]),
                        )

    def write_csv(self, stream: IO[str], actor_ids: Sequence[int]) -> int:
        writer = csv.writer(stream)
        writer.writerow(TRACE_HEADER)
        count = 0
        for row in self.rows(actor_ids):
            writer.writerow(row)
            count += 1
        return count


@dataclass
class CycleOutput:
    enhanced: Tensor
    reorganized: ReorganizedContext
    traces: AttentionTraces
    actor_stages: List[np.ndarray] = field(default_factory=list)
    context_stages: List[np.ndarray] = field(default_factory=list)
