from feature_frontend.clipfile import read_clip
from harness.checkpoint import load_checkpoint
from harness.diagnostics import (
    similarity_diagnostic,
    stage_means,
    write_similarity_csv
)
from harness.management.base import HarnessCommand
from synth_data.structures import SceneSample


class Command(HarnessCommand):
    help = "Pairwise cosine similarity of actors and contexts per layer"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, help="checkpoint directory")
        parser.add_argument("--scene", required=True, help="clip file")
        parser.add_argument("--out", required=True, help="trace CSV path")

    def run(self, **options):
        checkpoint = load_checkpoint(options["ckpt"])
        sample = SceneSample.from_clip(
            read_clip(options["scene"]), checkpoint.data.num_classes
        )
        rows = similarity_diagnostic(checkpoint.model, sample)
        with open(self.output_path(options["out"]), "w", newline="") as stream:
            write_similarity_csv(stream, rows)
        for (branch, stage), value in stage_means(rows).items():
            self.stdout.write(f"{branch} {stage}: {value:.4f}")
        self.success(f"Wrote {len(rows)} similarity rows to {options['out']}")
