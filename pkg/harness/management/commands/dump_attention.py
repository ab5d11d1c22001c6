from feature_frontend.clipfile import read_clip
from harness.checkpoint import load_checkpoint
from harness.diagnostics import dump_attention
from harness.management.base import HarnessCommand
from synth_data.structures import SceneSample


class Command(HarnessCommand):
    help = "Export every attention weight of one clip as CSV"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, help="checkpoint directory")
        parser.add_argument("--scene", required=True, help="clip file")
        parser.add_argument("--out", required=True, help="attention CSV path")

    def run(self, **options):
        checkpoint = load_checkpoint(options["ckpt"])
        sample = SceneSample.from_clip(
            read_clip(options["scene"]), checkpoint.data.num_classes
        )
        with open(self.output_path(options["out"]), "w", newline="") as stream:
            count = dump_attention(
                checkpoint.model, sample, stream, checkpoint.bank
            )
        self.success(f"Wrote {count} attention weights to {options['out']}")
