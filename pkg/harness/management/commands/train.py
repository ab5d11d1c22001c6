from pathlib import Path

from django.conf import settings
from django.utils import timezone

from harness.checkpoint import save_checkpoint
from harness.config import DataShape
from harness.management.base import HarnessCommand, read_json
from harness.models import ExperimentRun
from harness.serializers import parse_run_config
from harness.training import train
from synth_data.dataset import load_dataset
from synth_data.generator import split
from tensor_core.exceptions import TrainingDivergedError


class Command(HarnessCommand):
    help = "Train the action detector and write a checkpoint directory"

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="run config JSON")
        parser.add_argument("--data", required=True, help="dataset directory")
        parser.add_argument(
            "--out", help="checkpoint directory (default ARTIFACTS_ROOT/runs/<name>)"
        )
        parser.add_argument(
            "--val-fraction",
            type=float,
            default=0.0,
            help="share of videos held out for periodic evaluation",
        )

    def run(self, **options):
        config = parse_run_config(read_json(options["config"]))
        spec, samples = load_dataset(options["data"])
        val_fraction = options["val_fraction"]
        train_samples, val_samples = split(
            samples, (1.0 - val_fraction, val_fraction), seed=config.seed
        )
        data = DataShape.from_scene_spec(spec)
        out = options["out"] or str(
            Path(settings.ACTION_HEAD["ARTIFACTS_ROOT"]) / "runs" / config.name
        )
        record = ExperimentRun.objects.create(
            name=config.name,
            seed=config.seed,
            config=config.to_dict(),
            checkpoint_dir=out,
        )

        def progress(row):
            record.steps_completed = row.step + 1
            record.final_loss = row.loss
            if row.val_map is not None:
                self.stdout.write(f"step {row.step}: val mAP {row.val_map:.4f}")

        try:
            result = train(config, train_samples, data, val_samples, progress)
        except TrainingDivergedError:
            record.status = ExperimentRun.Status.DIVERGED
            record.finished_at = timezone.now()
            record.save()
            raise
        save_checkpoint(
            out, config, data, result.model, result.bank, result.metrics
        )
        record.status = ExperimentRun.Status.FINISHED
        record.steps_completed = result.steps_completed
        record.final_loss = result.final_loss
        record.finished_at = timezone.now()
        record.save()
        self.success(
            f"Trained {config.name} for {result.steps_completed} steps, "
            f"final loss {result.final_loss}; checkpoint in {out}"
        )
