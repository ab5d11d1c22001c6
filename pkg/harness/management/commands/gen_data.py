from harness.management.base import HarnessCommand, read_json
from synth_data.dataset import write_dataset
from synth_data.generator import audit_rules, generate
from synth_data.rules import context_necessity
from synth_data.serializers import parse_scene_spec


class Command(HarnessCommand):
    help = "Generate a synthetic scene dataset from a scene spec"

    def add_arguments(self, parser):
        parser.add_argument("--spec", required=True, help="scene spec JSON")
        parser.add_argument("--out", required=True, help="dataset directory")
        parser.add_argument("--count", type=int, required=True)
        parser.add_argument("--workers", type=int, default=1)

    def run(self, **options):
        spec = parse_scene_spec(read_json(options["spec"]))
        samples = generate(spec, options["count"], workers=options["workers"])
        manifest = write_dataset(samples, spec, options["out"])
        necessity = context_necessity(samples, spec)
        if spec.feature_source == "embedding":
            agreement = audit_rules(samples, spec)
            if agreement < 1.0:
                self.warning(f"rule audit reproduced {agreement:.2%} of labels")
        self.success(
            f"Wrote {len(samples)} clips to {manifest} "
            f"(actor-only oracle accuracy {necessity['actor_only_accuracy']:.4f})"
        )
