import json
from pathlib import Path

from harness.checkpoint import load_checkpoint
from harness.evaluation import evaluate
from harness.management.base import HarnessCommand
from harness.models import EvaluationReport, ExperimentRun
from synth_data.dataset import load_dataset


class Command(HarnessCommand):
    help = "Evaluate a checkpoint and write a per-class AP report"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, help="checkpoint directory")
        parser.add_argument("--data", required=True, help="dataset directory")
        parser.add_argument("--report", required=True, help="report JSON path")

    def run(self, **options):
        checkpoint = load_checkpoint(options["ckpt"])
        _, samples = load_dataset(options["data"])
        report = evaluate(checkpoint.model, samples)
        with open(self.output_path(options["report"]), "w") as stream:
            json.dump(report.to_dict(), stream, indent=2)
        run = (
            ExperimentRun.objects.filter(checkpoint_dir=str(options["ckpt"]))
            .order_by("-created_at")
            .first()
        )
        EvaluationReport.objects.create(
            run=run,
            data_dir=str(Path(options["data"])),
            mean_ap=report.map,
            per_class_ap=report.per_class_ap,
            excluded_classes=report.excluded,
            category_ap=report.category_ap,
        )
        if report.excluded:
            self.warning(
                f"Classes without positives excluded: {report.excluded}"
            )
        self.success(f"mAP {report.map:.4f} over {report.num_actors} actors")
