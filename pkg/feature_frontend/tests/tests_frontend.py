import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal
from rest_framework.exceptions import ValidationError

from feature_frontend.clipfile import read_clip, write_clip
from feature_frontend.encoder import ToyEncoder
from feature_frontend.frontend import (
    FeatureFrontend,
    FrontendConfig,
    spatial_max_context
)
from feature_frontend.roi_align import roi_align_3d
from feature_frontend.structures import ActorBox, Clip, FeatureMap
from tensor_core import functional as F
from tensor_core.exceptions import DimensionError, GeometryError
from tensor_core.gradcheck import check_gradients
from tensor_core.rng import Rng
from tensor_core.tensor import tensor


def sample_map(shape=(3, 2, 6, 6), seed=0) -> FeatureMap:
    return FeatureMap(tensor(Rng(seed).normal(0, 1, shape)))


def sample_frontend(in_channels=3, reduced_dim=4, roi_size=(3, 3)):
    return FeatureFrontend(
        FrontendConfig(in_channels, reduced_dim, roi_size), Rng(5)
    )


def identity_frontend(channels=3):
    frontend = sample_frontend(in_channels=channels, reduced_dim=channels)
    for layer in (frontend.actor_reduction, frontend.context_reduction):
        layer.weight.data = np.eye(channels)
        layer.bias.data = np.zeros((1, channels))
    return frontend


class RoiAlignTest(SimpleTestCase):
    def test_constant_field(self):
        feature_map = FeatureMap(tensor(np.full((2, 3, 5, 7), 2.5)))
        box = ActorBox(0, (0.1, 0.3, 0.55, 0.9))
        out = roi_align_3d(feature_map, box, (3, 2))
        self.assertEqual(out.shape, (2, 3, 3, 2))
        assert_allclose(out.data, 2.5, atol=1e-12)

    def test_identity_crop(self):
        feature_map = sample_map((2, 3, 4, 5))
        box = ActorBox(0, (0.0, 0.0, 1.0, 1.0))
        out = roi_align_3d(feature_map, box, (4, 5), sampling_ratio=0)
        assert_allclose(out.data, feature_map.values.data, atol=1e-6)

    def test_hand_computed_bilinear_ramp(self):
        ramp = np.arange(16, dtype=float).reshape(1, 1, 4, 4)
        box = ActorBox(0, (0.25, 0.25, 0.75, 0.75))
        out = roi_align_3d(FeatureMap(tensor(ramp)), box, (2, 2))
        assert_allclose(out.data[0, 0], [[5.0, 6.0], [9.0, 10.0]], atol=1e-12)

    def test_translation_consistency(self):
        values = Rng(2).normal(0, 1, (2, 2, 12, 12))
        shifted = np.roll(values, shift=(2, 3), axis=(2, 3))
        box = ActorBox(0, (2 / 12, 3 / 12, 6 / 12, 7 / 12))
        moved = ActorBox(0, (5 / 12, 5 / 12, 9 / 12, 9 / 12))
        original = roi_align_3d(FeatureMap(tensor(values)), box, (3, 3))
        translated = roi_align_3d(FeatureMap(tensor(shifted)), moved, (3, 3))
        assert_allclose(translated.data, original.data, atol=1e-6)

    def test_degenerate_box(self):
        feature_map = sample_map()
        with self.assertRaises(GeometryError):
            roi_align_3d(feature_map, ActorBox(0, (1.2, 0.1, 1.5, 0.5)), (2, 2))
        with self.assertRaises(GeometryError):
            ActorBox(0, (0.5, 0.1, 0.5, 0.5))

    def test_gradient_with_respect_to_map(self):
        values = tensor(Rng(3).normal(0, 1, (2, 2, 4, 4)), requires_grad=True)
        box = ActorBox(0, (0.1, 0.2, 0.8, 0.7))
        weights = tensor(Rng(4).normal(0, 1, (2, 2, 2, 3)))
        report = check_gradients(
            lambda: F.sum_(F.mul(
                roi_align_3d(FeatureMap(values), box, (2, 3)), weights
            )),
            [values],
        )
        self.assertLess(report.max_relative_error, 1e-4)


class ExtractActorFeaturesTest(SimpleTestCase):
    def test_no_actors(self):
        features = sample_frontend().extract_actor_features(sample_map(), [])
        self.assertEqual(features.local.shape, (0, 4, 3, 3))
        self.assertEqual(features.roi.shape, (0, 4))

    def test_constant_field_with_identity_reduction(self):
        feature_map = FeatureMap(tensor(np.full((3, 2, 6, 6), 1.75)))
        box = ActorBox(0, (0.2, 0.2, 0.6, 0.7))
        features = identity_frontend().extract_actor_features(
            feature_map, [box]
        )
        assert_allclose(features.local.data, 1.75, atol=1e-12)
        assert_allclose(features.roi.data, 1.75, atol=1e-12)

    def test_roi_is_spatial_max_of_local(self):
        boxes = [
            ActorBox(0, (0.1, 0.1, 0.5, 0.6)),
            ActorBox(1, (0.4, 0.3, 0.9, 0.95)),
        ]
        features = sample_frontend().extract_actor_features(
            sample_map(), boxes
        )
        local = features.local.data
        for i in range(2):
            for k in range(4):
                self.assertEqual(features.roi.data[i, k], local[i, k].max())

    def test_actor_order_equivariance(self):
        frontend = sample_frontend()
        boxes = [
            ActorBox(0, (0.1, 0.1, 0.5, 0.6)),
            ActorBox(1, (0.4, 0.3, 0.9, 0.95)),
            ActorBox(2, (0.0, 0.5, 0.3, 1.0)),
        ]
        order = [2, 0, 1]
        straight = frontend.extract_actor_features(sample_map(), boxes)
        permuted = frontend.extract_actor_features(
            sample_map(), [boxes[i] for i in order]
        )
        assert_array_equal(permuted.roi.data, straight.roi.data[order])
        assert_array_equal(permuted.local.data, straight.local.data[order])

    def test_channel_mismatch(self):
        with self.assertRaises(DimensionError):
            sample_frontend(in_channels=5).preprocess_context(sample_map())


class PreprocessContextTest(SimpleTestCase):
    def test_constant_field(self):
        frontend = sample_frontend()
        feature_map = FeatureMap(tensor(np.full((3, 4, 5, 5), -0.5)))
        context = frontend.preprocess_context(feature_map)
        self.assertEqual(context.local.shape, (4, 4))
        for t in range(1, 4):
            assert_allclose(context.local.data[:, t], context.local.data[:, 0])
        assert_allclose(context.global_.data, context.local.data[:, 0])

    def test_single_frame(self):
        context = sample_frontend().preprocess_context(
            sample_map((3, 1, 4, 4))
        )
        assert_array_equal(context.global_.data, context.local.data[:, 0])

    def test_pooling_oracle_and_global_mean(self):
        feature_map = sample_map((3, 5, 4, 6))
        pooled = spatial_max_context(feature_map).data
        values = feature_map.values.data
        for c in range(3):
            for t in range(5):
                self.assertEqual(pooled[c, t], values[c, t].max())
        context = identity_frontend().preprocess_context(feature_map)
        assert_allclose(context.local.data, pooled, atol=1e-12)
        assert_allclose(
            context.global_.data, context.local.data.mean(axis=1), atol=1e-6
        )

    def test_max_pool_scales_linearly(self):
        feature_map = sample_map()
        scaled = FeatureMap(tensor(feature_map.values.data * 3.5))
        assert_allclose(
            spatial_max_context(scaled).data,
            3.5 * spatial_max_context(feature_map).data,
        )


class ToyEncoderTest(SimpleTestCase):
    def test_encoder_is_frozen_and_deterministic(self):
        video = Rng(1).random((3, 2, 6, 6))
        first = ToyEncoder(out_channels=5, seed=3).encode(video)
        second = ToyEncoder(out_channels=5, seed=3).encode(video)
        self.assertEqual(first.values.shape, (5, 2, 6, 6))
        self.assertFalse(first.values.requires_grad)
        assert_array_equal(first.values.data, second.values.data)

    def test_rejects_non_rgb_video(self):
        with self.assertRaises(DimensionError):
            ToyEncoder(out_channels=2).encode(np.zeros((4, 2, 6, 6)))


class ClipFileTest(SimpleTestCase):
    def test_round_trip(self):
        clip = Clip(
            feature_map=sample_map(),
            video_id="vid_0001",
            clip_time_s=7,
            boxes=[ActorBox(3, (0.1, 0.2, 0.4, 0.6), 0.9)],
            labels=[[0, 4]],
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = write_clip(Path(tmp) / "clip_00000", clip)
            loaded = read_clip(path)
        assert_array_equal(
            loaded.feature_map.values.data, clip.feature_map.values.data
        )
        self.assertEqual(loaded.video_id, "vid_0001")
        self.assertEqual(loaded.clip_time_s, 7)
        self.assertEqual(loaded.boxes, clip.boxes)
        self.assertEqual(loaded.labels, [[0, 4]])

    def test_invalid_sidecar_is_rejected(self):
        clip = Clip(sample_map(), "v", 0, [ActorBox(0, (0.1, 0.1, 0.3, 0.3))])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_clip(Path(tmp) / "clip", clip)
            sidecar = path.with_suffix(".json")
            sidecar.write_text(sidecar.read_text().replace('"x2": 0.3', '"x2": 0.05'))
            with self.assertRaises(ValidationError):
                read_clip(path)
