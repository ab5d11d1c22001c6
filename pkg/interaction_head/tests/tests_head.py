import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from cycleacr.tests.oracles import numpy_attention
from feature_frontend.structures import ActorBox
from interaction_head.head import (
    Classifier,
    HeadConfig,
    InteractionHead,
    classify,
    fuse_scores,
    instance_interact
)
from tensor_core import functional as F
from tensor_core.exceptions import ConfigError, DimensionError
from tensor_core.gradcheck import check_gradients
from tensor_core.rng import Rng
from tensor_core.tensor import tensor


def sample_head(**overrides):
    params = {"channels": 4, "attention_dim": 4, "num_classes": 3}
    params.update(overrides)
    seed = params.pop("seed", 0)
    return InteractionHead(HeadConfig(**params), Rng(seed)).eval()


def sample_actors(count, channels=4, seed=1):
    return tensor(Rng(seed).normal(0, 1, (count, channels)))


def sample_boxes(confidences):
    return [
        ActorBox(id=index, box=(0.1, 0.1, 0.5, 0.5), confidence=confidence)
        for index, confidence in enumerate(confidences)
    ]


class InstanceInteractTest(SimpleTestCase):
    def test_dead_residuals_with_empty_bank(self):
        head = sample_head()
        for block in head.clip_blocks + head.bank_blocks:
            block.output.weight.data[:] = 0.0
        actors = sample_actors(3)
        out, _ = head(actors, tensor(np.zeros((0, 4))), Rng(0), training=True)
        assert_array_equal(out.data, actors.data)

    def test_single_actor_attends_to_itself(self):
        _, traces = sample_head()(sample_actors(1), None, Rng(0))
        for record in traces.records:
            assert_array_equal(record.weights, np.ones((1, 1, 1)))

    def test_matches_four_block_composition(self):
        head = sample_head(depth=2)
        actors = sample_actors(2)
        bank = sample_actors(2, seed=7)
        out, _ = head(actors, bank, Rng(0))
        expected = actors.data
        for clip_block, bank_block in zip(head.clip_blocks, head.bank_blocks):
            expected = numpy_attention(clip_block, expected, expected)
            expected = numpy_attention(bank_block, expected, bank.data)
        assert_allclose(out.data, expected, atol=1e-10)

    def test_clip_step_runs_before_bank_step(self):
        _, traces = sample_head(depth=2)(
            sample_actors(2), sample_actors(3, seed=4), Rng(0)
        )
        order = [(record.branch, record.layer) for record in traces.records]
        self.assertEqual(
            order, [("clip", 1), ("bank", 1), ("clip", 2), ("bank", 2)]
        )
        self.assertEqual(traces.branch("bank")[0].weights.shape, (2, 1, 3))

    def test_bank_skipped_when_empty(self):
        _, traces = sample_head()(sample_actors(2), None, Rng(0))
        self.assertEqual(traces.branch("bank"), [])

    def test_no_actors(self):
        out, _ = sample_head()(sample_actors(0), sample_actors(2), Rng(0))
        self.assertEqual(out.shape, (0, 4))

    def test_bankless_head_ignores_bank(self):
        head = sample_head(use_bank=False)
        self.assertEqual(head.bank_blocks, [])
        with_bank, _ = head(sample_actors(2), sample_actors(3), Rng(0))
        without, _ = head(sample_actors(2), None, Rng(0))
        assert_array_equal(with_bank.data, without.data)

    def test_requires_blocks(self):
        with self.assertRaises(ConfigError):
            instance_interact(sample_actors(2), None, [], [], Rng(0))
        with self.assertRaises(ConfigError):
            HeadConfig(depth=0)


class ClassifierTest(SimpleTestCase):
    def setUp(self):
        self.classifier = Classifier(4, 3, Rng(0))

    def test_zero_weights_give_one_half(self):
        self.classifier.linear.weight.data[:] = 0.0
        probs = classify(sample_actors(2), self.classifier)
        assert_array_equal(probs.data, np.full((2, 3), 0.5))

    def test_saturation(self):
        self.classifier.linear.weight.data[:] = 0.0
        self.classifier.linear.bias.data[:] = 60.0
        probs = classify(sample_actors(1), self.classifier)
        assert_allclose(probs.data, 1.0, atol=1e-6)

    def test_matches_logistic_formula(self):
        actors = sample_actors(5)
        logits = (
            actors.data @ self.classifier.linear.weight.data
            + self.classifier.linear.bias.data
        )
        assert_allclose(
            classify(actors, self.classifier).data,
            1.0 / (1.0 + np.exp(-logits)),
            atol=1e-12,
        )

    def test_needs_a_class(self):
        with self.assertRaises(ConfigError):
            Classifier(4, 0, Rng(0))


class FuseScoresTest(SimpleTestCase):
    def test_neutral_confidence(self):
        probs = tensor(Rng(0).random((2, 3)))
        scores = fuse_scores(probs, sample_boxes([1.0, 1.0]))
        assert_array_equal(scores.fused, probs.data)

    def test_zero_confidence(self):
        scores = fuse_scores(tensor(Rng(0).random((1, 3))), sample_boxes([0.0]))
        assert_array_equal(scores.fused, np.zeros((1, 3)))

    def test_direct_product(self):
        scores = fuse_scores(tensor([[0.5]]), sample_boxes([0.8]))
        self.assertAlmostEqual(scores.fused[0, 0], 0.4, delta=1e-6)

    def test_ranking_is_preserved(self):
        probs = tensor(Rng(3).random((3, 5)))
        scores = fuse_scores(probs, sample_boxes([0.9, 0.6, 0.7]))
        for row in range(3):
            self.assertEqual(
                scores.ranking(row),
                list(np.argsort(-probs.data[row], kind="stable")),
            )

    def test_threshold_zeroes_weak_boxes(self):
        probs = tensor(np.full((2, 2), 0.5))
        scores = fuse_scores(probs, sample_boxes([0.9, 0.6]), threshold=0.8)
        assert_allclose(scores.fused, [[0.45, 0.45], [0.0, 0.0]])

    def test_count_mismatch(self):
        with self.assertRaises(DimensionError):
            fuse_scores(tensor(np.ones((2, 3))), sample_boxes([1.0]))


class HeadGradientTest(SimpleTestCase):
    def test_interaction_and_classifier_finite_differences(self):
        for seed in range(5):
            head = sample_head(seed=seed).train()
            classifier = Classifier(4, 3, Rng(seed + 50))
            actors = sample_actors(3, seed=seed + 10)
            bank = sample_actors(2, seed=seed + 20)
            targets = tensor(Rng(seed).integers(0, 2, (3, 3)).astype(float))

            def loss():
                out, _ = head(actors, bank, Rng(seed), training=True)
                probs = classifier(out)
                return F.sum_(F.binary_cross_entropy(probs, targets))

            report = check_gradients(
                loss, head.parameters() + classifier.parameters()
            )
            self.assertLess(report.max_relative_error, 1e-4, seed)
