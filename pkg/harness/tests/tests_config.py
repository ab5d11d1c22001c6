from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from harness.config import DataShape, RunConfig
from harness.serializers import AblationGridSerializer, parse_run_config
from harness.tests.fixtures import sample_spec


class RunConfigSerializerTest(SimpleTestCase):
    def test_defaults(self):
        self.assertEqual(parse_run_config({}), RunConfig())

    def test_round_trips_through_dict(self):
        config = parse_run_config(
            {"seed": 3, "cycle": {"mode": "a2c"}, "model": {"roi_size": [2, 4]}}
        )
        self.assertEqual(config.model.roi_size, (2, 4))
        self.assertEqual(parse_run_config(config.to_dict()), config)

    def test_mode_is_case_insensitive(self):
        config = parse_run_config({"cycle": {"mode": "C2A"}})
        self.assertEqual(config.cycle.mode, "c2a")

    def test_unknown_mode(self):
        with self.assertRaises(ValidationError):
            parse_run_config({"cycle": {"mode": "both"}})

    def test_needs_a_branch(self):
        with self.assertRaises(ValidationError):
            parse_run_config({"cycle": {"use_local": False, "use_global": False}})

    def test_milestones_increase(self):
        with self.assertRaises(ValidationError):
            parse_run_config({"optimizer": {"milestones": [20, 10]}})

    def test_milestones_within_run(self):
        with self.assertRaises(ValidationError):
            parse_run_config({"max_steps": 100, "optimizer": {"milestones": [100]}})

    def test_negative_learning_rate(self):
        with self.assertRaises(ValidationError):
            parse_run_config({"optimizer": {"lr": -0.1}})

    def test_variant_changes_named_fields(self):
        config = RunConfig()
        changed = config.variant(seed=4, cycle={"depth": 3})
        self.assertEqual(changed.seed, 4)
        self.assertEqual(changed.cycle.depth, 3)
        self.assertEqual(changed.cycle.mode, config.cycle.mode)
        self.assertEqual(config.cycle.depth, 2)


class AblationGridSerializerTest(SimpleTestCase):
    def test_defaults(self):
        serializer = AblationGridSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["depths"], [1, 2, 3])
        self.assertEqual(serializer.validated_data["base"]["max_steps"], 3000)

    def test_branch_needs_one_side(self):
        serializer = AblationGridSerializer(data={"branches": [[False, False]]})
        self.assertFalse(serializer.is_valid())
        self.assertIn("branches", serializer.errors)


class DataShapeTest(SimpleTestCase):
    def test_from_scene_spec(self):
        spec = sample_spec(detector_jitter=0.2)
        data = DataShape.from_scene_spec(spec)
        self.assertEqual(data.channels, spec.channels)
        self.assertEqual(data.frames, 8)
        self.assertEqual(len(data.categories), spec.num_classes)
        self.assertTrue(data.apply_threshold)
