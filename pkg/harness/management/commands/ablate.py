from django.core.management import CommandError

from harness.ablation import AblationGrid, ablation_suite, table_sections, write_table
from harness.config import DataShape
from harness.management.base import HarnessCommand, read_json
from harness.serializers import AblationGridSerializer, RunConfigSerializer
from synth_data.dataset import load_dataset
from synth_data.generator import split


class Command(HarnessCommand):
    help = "Run the mode/branch/bank/depth grid and write a mean +- std table"

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="grid JSON")
        parser.add_argument("--out", required=True, help="table CSV path")
        parser.add_argument("--data", help="dataset directory (overrides grid)")
        parser.add_argument("--val-fraction", type=float, default=0.2)

    def run(self, **options):
        serializer = AblationGridSerializer(data=read_json(options["config"]))
        serializer.is_valid(raise_exception=True)
        settings = serializer.validated_data
        data_dir = options["data"] or settings.get("data")
        if not data_dir:
            raise CommandError("no dataset: pass --data or set 'data' in the grid")
        base = RunConfigSerializer().create(settings["base"])
        grid = AblationGrid(
            modes=tuple(settings["modes"]),
            branches=tuple(tuple(pair) for pair in settings["branches"]),
            banks=tuple(settings["banks"]),
            depths=tuple(settings["depths"]),
            seeds=tuple(settings["seeds"]),
        )
        spec, samples = load_dataset(data_dir)
        fraction = options["val_fraction"]
        train_samples, val_samples = split(
            samples, (1.0 - fraction, fraction), seed=base.seed
        )
        cells = ablation_suite(
            base, grid, train_samples, val_samples, DataShape.from_scene_spec(spec)
        )
        with open(self.output_path(options["out"]), "w", newline="") as stream:
            write_table(stream, cells, base)
        for section, rows in table_sections(cells, base).items():
            self.stdout.write(section)
            for cell in rows:
                self.stdout.write(
                    f"  {cell.key}: {cell.mean:.4f} +- {cell.std:.4f}"
                )
        self.success(f"Wrote {len(cells)} grid cells to {options['out']}")
