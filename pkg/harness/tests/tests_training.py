import csv
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from harness.checkpoint import (
    CONFIG_FILE,
    METRICS_FILE,
    PARAMS_FILE,
    load_checkpoint,
    save_checkpoint
)
from harness.detector import ActionDetector
from harness.evaluation import fill_bank, predict
from harness.tests.fixtures import sample_config, sample_data, sample_scenes
from harness.training import METRICS_HEADER, batch_order, clip_loss, train
from tensor_core import functional as F
from tensor_core.exceptions import (
    FormatError,
    ParameterError,
    TrainingDivergedError
)
from tensor_core.rng import Rng
from tensor_core.tensor import tensor


class ClipLossTest(SimpleTestCase):
    def test_mean_over_classes_sum_over_actors(self):
        probs = tensor([[0.5, 0.5], [0.5, 0.5]])
        loss = clip_loss(probs, np.array([[1.0, 0.0], [0.0, 1.0]]))
        self.assertAlmostEqual(loss.item(), 2 * np.log(2.0))


class BatchOrderTest(SimpleTestCase):
    def test_covers_every_sample_each_epoch(self):
        batches = list(batch_order(5, 5, 3, Rng(0)))
        for batch in batches:
            self.assertEqual(sorted(batch), [0, 1, 2, 3, 4])

    def test_batches_span_epochs(self):
        batches = list(batch_order(3, 2, 3, Rng(0)))
        flat = [index for batch in batches for index in batch]
        self.assertEqual(sorted(flat), [0, 0, 1, 1, 2, 2])


class TrainTest(SimpleTestCase):
    def setUp(self):
        self.spec, self.samples = sample_scenes(4, clips_per_video=2)
        self.data = sample_data(self.spec)

    def test_needs_samples(self):
        with self.assertRaises(ParameterError):
            train(sample_config(), [], self.data)

    def test_deterministic(self):
        config = sample_config(max_steps=3)
        first = train(config, self.samples, self.data)
        second = train(config, self.samples, self.data)
        self.assertEqual(
            [row.loss for row in first.metrics],
            [row.loss for row in second.metrics],
        )
        for name, values in first.model.state_dict().items():
            np.testing.assert_array_equal(values, second.model.state_dict()[name])

    def test_zero_lr_keeps_parameters(self):
        config = sample_config(max_steps=2, optimizer={"lr": 0.0})
        result = train(config, self.samples, self.data)
        fresh = ActionDetector(config, self.data).state_dict()
        for name, values in result.model.state_dict().items():
            np.testing.assert_array_equal(values, fresh[name])

    def test_fills_bank_after_each_step(self):
        result = train(sample_config(max_steps=2), self.samples, self.data)
        self.assertGreater(len(result.bank), 0)
        self.assertEqual(result.steps_completed, 2)
        self.assertFalse(result.model.training)

    def test_validation_every_interval(self):
        config = sample_config(max_steps=3, eval_every=2)
        rows = []
        train(config, self.samples, self.data, self.samples[:2], rows.append)
        self.assertIsNone(rows[0].val_map)
        self.assertIsNotNone(rows[1].val_map)
        self.assertIsNotNone(rows[2].val_map)

    def test_divergence_is_reported(self):
        def exploding_loss(probs, targets):
            return F.scale(F.sum_(probs), float("inf"))

        with mock.patch("harness.training.clip_loss", exploding_loss):
            with self.assertRaisesRegex(TrainingDivergedError, "step 0"):
                train(sample_config(), self.samples, self.data)

    def test_overfits_a_single_clip(self):
        spec, samples = sample_scenes(1, n_actors=1)
        config = sample_config(max_steps=500, batch_size=1)
        result = train(config, samples, sample_data(spec))
        self.assertLess(min(row.loss for row in result.metrics), 1e-3)

    def test_bank_holds_eval_mode_features_of_trained_model(self):
        config = sample_config(
            max_steps=1, batch_size=4, model={"p_drop": 0.5}
        )
        result = train(config, self.samples, self.data)
        refilled = fill_bank(result.model, self.samples, result.model.new_bank())
        self.assertEqual(result.bank.keys(), refilled.keys())
        for video_id, clip_time_s in refilled.keys():
            for ours, theirs in zip(
                result.bank.entries[(video_id, clip_time_s)],
                refilled.entries[(video_id, clip_time_s)],
            ):
                np.testing.assert_array_equal(ours.feature.data, theirs.feature.data)

    def test_bank_starts_filled(self):
        config = sample_config(max_steps=1, batch_size=1)
        result = train(config, self.samples, self.data)
        self.assertEqual(len(result.bank), sum(len(s.boxes) for s in self.samples))

    def test_no_bank_without_bank_reads(self):
        config = sample_config(max_steps=2, head={"use_bank": False})
        result = train(config, self.samples, self.data)
        self.assertEqual(len(result.bank), 0)


class CheckpointTest(SimpleTestCase):
    def setUp(self):
        self.spec, self.samples = sample_scenes(4, clips_per_video=2)
        self.data = sample_data(self.spec)
        self.config = sample_config(max_steps=2)
        self.result = train(self.config, self.samples, self.data)

    def test_round_trip(self):
        with tempfile.TemporaryDirectory() as directory:
            save_checkpoint(
                directory,
                self.config,
                self.data,
                self.result.model,
                self.result.bank,
                self.result.metrics,
            )
            for name in (CONFIG_FILE, PARAMS_FILE, METRICS_FILE):
                self.assertTrue((Path(directory) / name).exists())
            checkpoint = load_checkpoint(directory)
            with open(Path(directory) / METRICS_FILE) as stream:
                rows = list(csv.reader(stream))

        self.assertEqual(checkpoint.config, self.config)
        self.assertEqual(checkpoint.data, self.data)
        self.assertEqual(len(checkpoint.bank), len(self.result.bank))
        self.assertEqual(tuple(rows[0]), METRICS_HEADER)
        self.assertEqual(len(rows), 3)
        before, _, _ = predict(self.result.model, self.samples)
        after, _, _ = predict(checkpoint.model, self.samples)
        np.testing.assert_allclose(after, before, rtol=1e-6)

    def test_missing_directory(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(FormatError):
                load_checkpoint(Path(directory) / "absent")
