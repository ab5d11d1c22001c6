from dataclasses import dataclass
from typing import Optional

from cycleacr.cycle import CycleACR
from cycleacr.structures import AttentionTraces, CycleConfig, CycleOutput
from feature_frontend.frontend import FeatureFrontend, FrontendConfig
from feature_frontend.structures import Clip
from harness.config import DataShape, RunConfig
from interaction_head.bank import MemoryBank
from interaction_head.head import Classifier, HeadConfig, InteractionHead
from tensor_core.module import Module
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor


@dataclass
class DetectorOutput:
    probs: Tensor
    enhanced: Tensor
    interacted: Tensor
    cycle: CycleOutput
    head_traces: AttentionTraces

    @property
    def traces(self) -> AttentionTraces:
        traces = AttentionTraces()
        traces.extend(self.cycle.traces)
        traces.extend(self.head_traces)
        return traces


class ActionDetector(Module):
    """Frontend, cycle relation head, instance interaction and classifier."""

    def __init__(self, config: RunConfig, data: DataShape):
        self.config, self.data = config, data
        rng = Rng(config.seed)
        model = config.model
        self.frontend = FeatureFrontend(
            FrontendConfig(
                in_channels=data.channels,
                reduced_dim=model.reduced_dim,
                roi_size=tuple(model.roi_size),
                sampling_ratio=model.sampling_ratio,
            ),
            rng.derive(1),
        )
        self.cycle = CycleACR(
            CycleConfig(
                depth=config.cycle.depth,
                channels=model.reduced_dim,
                attention_dim=model.attention_dim,
                frames=data.frames,
                p_drop=model.p_drop,
                use_local_branch=config.cycle.use_local,
                use_global_branch=config.cycle.use_global,
                mode=config.cycle.mode,
                layer_norm_eps=model.layer_norm_eps,
            ),
            rng.derive(2),
        )
        self.head = InteractionHead(
            HeadConfig(
                channels=model.reduced_dim,
                attention_dim=model.attention_dim,
                num_classes=data.num_classes,
                depth=config.head.depth,
                p_drop=model.p_drop,
                use_bank=config.head.use_bank,
                layer_norm_eps=model.layer_norm_eps,
            ),
            rng.derive(3),
        )
        self.classifier = Classifier(
            model.reduced_dim, data.num_classes, rng.derive(4)
        )

    @property
    def uses_bank(self) -> bool:
        return self.config.head.use_bank

    def new_bank(self) -> MemoryBank:
        return MemoryBank(self.config.model.reduced_dim, self.config.head.window_s)

    def enhance(self, clip: Clip, rng: Rng) -> Tensor:
        """Eval-mode context-enhanced actors, the features a bank stores."""
        actors, context = self.frontend(clip.feature_map, clip.boxes)
        return self.cycle(actors, context, rng, training=False).enhanced

    def forward(
        self,
        clip: Clip,
        bank: Optional[MemoryBank],
        rng: Rng,
        training: Optional[bool] = None,
    ) -> DetectorOutput:
        if training is None:
            training = self.training
        actors, context = self.frontend(clip.feature_map, clip.boxes)
        cycle = self.cycle(actors, context, rng, training)
        bank_feats = None
        if bank is not None and self.uses_bank:
            bank_feats = bank.features(clip.video_id, clip.clip_time_s)
        interacted, head_traces = self.head(cycle.enhanced, bank_feats, rng, training)
        return DetectorOutput(
            probs=self.classifier(interacted),
            enhanced=cycle.enhanced,
            interacted=interacted,
            cycle=cycle,
            head_traces=head_traces,
        )
