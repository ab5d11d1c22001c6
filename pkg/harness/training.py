import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from harness.config import DataShape, RunConfig
from harness.detector import ActionDetector
from harness.evaluation import evaluate, fill_bank, write_bank
from harness.optim import SGD, StepSchedule
from interaction_head.bank import MemoryBank
from synth_data.structures import SceneSample
from tensor_core import functional as F
from tensor_core.exceptions import (
    NonFiniteError,
    ParameterError,
    TrainingDivergedError
)
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor, backward, tensor

logger = logging.getLogger(__name__)

METRICS_HEADER = ("step", "lr", "loss", "val_map")


@dataclass
class MetricRow:
    step: int
    lr: float
    loss: float
    val_map: Optional[float] = None

    def as_row(self) -> tuple:
        return (
            self.step,
            repr(self.lr),
            repr(self.loss),
            "" if self.val_map is None else repr(self.val_map),
        )


@dataclass
class TrainResult:
    model: ActionDetector
    bank: MemoryBank
    metrics: List[MetricRow] = field(default_factory=list)

    @property
    def final_loss(self) -> Optional[float]:
        return self.metrics[-1].loss if self.metrics else None

    @property
    def steps_completed(self) -> int:
        return len(self.metrics)


def write_metrics(path: Union[str, Path], metrics: Sequence[MetricRow]) -> None:
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(METRICS_HEADER)
        writer.writerows(row.as_row() for row in metrics)


def clip_loss(probs: Tensor, targets: np.ndarray) -> Tensor:
    """Binary cross-entropy, mean over classes, summed over actors."""
    per_entry = F.binary_cross_entropy(probs, tensor(targets, dtype=probs.dtype))
    return F.sum_(F.mean(per_entry, axis=1))


def batch_order(count: int, batch_size: int, steps: int, rng: Rng):
    """Yield index batches from successive seeded permutations."""
    pending: List[int] = []
    for _ in range(steps):
        while len(pending) < batch_size:
            pending.extend(int(i) for i in rng.permutation(count))
        batch, pending = pending[:batch_size], pending[batch_size:]
        yield batch


def train(
    config: RunConfig,
    train_samples: Sequence[SceneSample],
    data: DataShape,
    val_samples: Sequence[SceneSample] = (),
    on_step: Optional[Callable[[MetricRow], None]] = None,
) -> TrainResult:
    """SGD on the summed per-actor loss, averaged over each batch of clips.

    The bank starts filled by the initial model. It is read as it stands
    and each batch rewrites its clips with eval-mode enhanced actors after
    the parameter update, as evaluation fills it.
    """
    if not train_samples:
        raise ParameterError("training needs at least one sample")
    model = ActionDetector(config, data).train()
    bank = model.new_bank()
    optimizer = SGD(list(model.named_parameters()), config.optimizer)
    schedule = StepSchedule(config.optimizer)
    order_rng = Rng(config.seed).derive(10)
    dropout_rng = Rng(config.seed).derive(11)
    bank_rng = Rng(config.seed).derive(12)
    if model.uses_bank:
        fill_bank(model, train_samples, bank)
    result = TrainResult(model=model, bank=bank)

    batches = batch_order(
        len(train_samples), config.batch_size, config.max_steps, order_rng
    )
    for step, batch in enumerate(batches):
        lr = schedule(step)
        optimizer.zero_grad()
        clips = [train_samples[index] for index in batch]
        try:
            outputs = [
                model(sample.clip, bank if model.uses_bank else None, dropout_rng)
                for sample in clips
            ]
            losses = [
                clip_loss(output.probs, sample.labels)
                for output, sample in zip(outputs, clips)
                if sample.boxes
            ]
            if losses:
                total = losses[0]
                for item in losses[1:]:
                    total = F.add(total, item)
                loss = F.scale(total, 1.0 / len(clips))
                backward(loss)
                loss_value = loss.item()
            else:
                loss_value = 0.0
            if not np.isfinite(loss_value):
                raise NonFiniteError(f"loss is {loss_value}")
            for name, param in model.named_parameters():
                if param.grad is not None and not np.all(np.isfinite(param.grad)):
                    raise NonFiniteError(f"gradient of {name} is not finite")
        except NonFiniteError as error:
            raise TrainingDivergedError(
                f"training diverged at step {step} (lr {lr:.6g}): {error}"
            ) from error
        if losses:
            optimizer.step(lr)
        if model.uses_bank:
            for sample in clips:
                write_bank(model, sample, bank, bank_rng)

        row = MetricRow(step=step, lr=lr, loss=loss_value)
        last = step == config.max_steps - 1
        if val_samples and config.eval_every and (
            (step + 1) % config.eval_every == 0 or last
        ):
            row.val_map = evaluate(model, val_samples).map
        logger.debug("step %d lr %.6g loss %.6f", step, lr, loss_value)
        result.metrics.append(row)
        if on_step is not None:
            on_step(row)

    model.eval()
    logger.info(
        "trained %s for %d steps, final loss %s",
        config.name,
        result.steps_completed,
        result.final_loss,
    )
    return result
